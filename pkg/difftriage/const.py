# Artifact schema

SCHEMA_VERSION = 1

# Decompiler naming: FUN_<hex address>, modified functions become mod_<old>_<new>
DECOMPILER_FUNCTION_PREFIX = "FUN_"
CANONICAL_MODIFIED_PREFIX = "mod_"

# FSS vector strings, e.g. "FSS:1/B:H/R:M/C:N/I:L/A:N"
FSS_VECTOR_PREFIX = "FSS:1"
FSS_MAX_SCORE = 10.0
FSS_SENSITIVITY_COEFFICIENT = 5.3
FSS_IMPACT_COEFFICIENT = 6.1

# LLM transport
ENV_API_KEY = "LLM_API_KEY"
CHAT_COMPLETIONS_PATH = "chat/completions"
DEFAULT_BASE_URL = "https://api.openai.com/v1"
DEFAULT_MODEL = "gpt-5-mini"
DEFAULT_TEMPERATURE = 1.0
DEFAULT_TOP_P = 1.0
DEFAULT_MAX_RETRIES = 3
DEFAULT_TIMEOUT_SECONDS = 120.0
DEFAULT_BACKOFF_SECONDS = 1.0
RETRYABLE_STATUS_CODES = {408, 409, 429, 500, 502, 503, 504}

# Summarization
DEFAULT_CONCURRENCY = 4
DEFAULT_CODE_BUDGET = 24_000
DEFAULT_DIFF_BUDGET = 24_000
DEFAULT_DIFF_CONTEXT = 3
CYCLE_STUB_SUMMARY = "summary unavailable: mutual recursion"
FAILED_STUB_SUMMARY = "summary unavailable: analysis failed"

# Markers shared between prompt builders and the mock backend
CODE_SECTION_HEADER = "## Decompiled code"
DEPENDENCY_SECTION_HEADER = "## Dependencies"
DIFF_SECTION_HEADER = "## Textual diff (old -> new)"
FSS_REQUEST_MARKER = "## Functional Sensitivity Score"
VERDICT_LINE_PREFIX = "VERDICT:"
FUNCTION_NAME_LABEL = "Name:"
PREDICTION_SCORE_LABEL = "FSS score:"

# Prediction
DEFAULT_TOP_K = 5
DEFAULT_EVALUATION_K_VALUES = (5, 10)
DEFAULT_EVALUATION_CHANGELOG_OPTIONS = (False, True)
DEFAULT_MOCK_VERDICT_THRESHOLD = 5.0
NO_CHANGES_RATIONALE = "no changes"
# UNKNOWN without a prediction request
SUMMARIZATION_FAILED_RATIONALE = "not predicted: every function failed summarization"

# CLI exit codes
EXIT_BENIGN = 0
EXIT_ERROR = 1
EXIT_MALICIOUS = 2
EXIT_UNKNOWN = 3

# Run directory layout
RUN_ANALYSES_DIR = "analyses"
RUN_PROMPTS_DIR = "prompts"
RUN_INFO_FILE = "run.json"
REPORT_JSON_FILE = "report.json"
REPORT_MARKDOWN_FILE = "report.md"
CORPUS_MANIFEST_FILE = "manifest.json"
EVALUATION_JSON_FILE = "evaluation.json"
EVALUATION_MARKDOWN_FILE = "evaluation.md"
