"""
Synthetic labeled corpora.

Every project is a small program of template-generated decompiled functions that evolves over
a number of versions through benign edits (changed constants, renamed locals, added and removed
helpers). For each pair of consecutive versions the corpus holds the clean update and one
"injected slot": the same update with a payload family wired into `main` behind an
attacker-only command line option, or, if the slot is not injected, a benign rebuild.

Payloads are inert text. They only carry the API names the mock rule table reacts to.
"""

import json
import logging
import random
import re
from os import PathLike
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, ValidationError

from difftriage.const import CORPUS_MANIFEST_FILE, DECOMPILER_FUNCTION_PREFIX, SCHEMA_VERSION
from difftriage.errors import ArtifactError, EvaluationError
from difftriage.ingest import load_artifact, save_artifact
from difftriage.model import BinaryMeta, DiffArtifact, FunctionKind, FunctionRecord, Label
from difftriage.util.hashing import sha256_hex

logger = logging.getLogger(__name__)

FAMILIES = ("rat", "botnet", "rware")
CLEAN_VARIANT = "clean"
REBUILD_VARIANT = "rebuild"

BASE_ADDRESS = 0x401000

_REFERENCE = re.compile(r"@(\w+)")
_DECIMAL = re.compile(r"(?<![\w.%])(\d+)(?![\w.])")
_LOCAL = re.compile(r"\blocal_[0-9a-f]+\b")

PROJECTS: Tuple[Tuple[str, str], ...] = (
    ("csvtool", "csvtool is a command line utility that converts CSV files into JSON records."),
    ("logrotate", "logrotate rotates, compresses and removes old log files of local services."),
    ("kvstore", "kvstore is an embedded key-value store keeping records in a single data file."),
    ("mdparse", "mdparse renders Markdown documents to HTML for static site generators."),
    ("imgmeta", "imgmeta prints and edits metadata of image files."),
    ("tinycalc", "tinycalc is a command line calculator for arithmetic expressions."),
)

_BASE_TEMPLATES: Dict[str, Tuple[str, ...]] = {
    "parse_args": (
        "int local_c;",
        "local_c = 1;",
        "while (local_c < param_1) {",
        "  if (strcmp(*(char **)(param_2 + (long)local_c * 8),\"-v\") == 0) {",
        "    DAT_00604010 = DAT_00604010 + 1;",
        "  }",
        "  local_c = local_c + 1;",
        "}",
        "return local_c;",
    ),
    "read_file": (
        "FILE *local_18;",
        "size_t local_10;",
        "local_18 = fopen((char *)param_1,\"rb\");",
        "if (local_18 == (FILE *)0x0) {",
        "  return 0xffffffff;",
        "}",
        "local_10 = fread((void *)param_2,1,0x1000,local_18);",
        "fclose(local_18);",
        "return (int)local_10;",
    ),
    "checksum": (
        "uint local_c;",
        "int local_10;",
        "local_c = 5381;",
        "for (local_10 = 0; local_10 < param_2; local_10 = local_10 + 1) {",
        "  local_c = local_c * 33 + (uint)*(byte *)(param_1 + local_10);",
        "}",
        "return local_c;",
    ),
    "format_record": (
        "int local_c;",
        "local_c = snprintf((char *)param_1,0x100,\"%s,%d\\n\",param_2,param_3);",
        "if (255 < local_c) {",
        "  local_c = 255;",
        "}",
        "return local_c;",
    ),
    "grow_buffer": (
        "void *local_10;",
        "local_10 = realloc(*(void **)param_1,(long)param_2 * 2);",
        "if (local_10 == (void *)0x0) {",
        "  return 0xffffffff;",
        "}",
        "*(void **)param_1 = local_10;",
        "return param_2 * 2;",
    ),
    "print_usage": (
        "printf(\"usage: %s [-v] FILE\\n\",param_1);",
        "puts(\"  -v  verbose output\");",
        "return 0;",
    ),
    "compare_keys": (
        "int local_c;",
        "local_c = strcmp(*(char **)param_1,*(char **)param_2);",
        "if (local_c == 0) {",
        "  local_c = *(int *)(param_1 + 8) - *(int *)(param_2 + 8);",
        "}",
        "return local_c;",
    ),
    "log_message": (
        "time_t local_10;",
        "local_10 = time((time_t *)0x0);",
        "fprintf(stderr,\"[%ld] %s\\n\",local_10,param_1);",
        "return 0;",
    ),
}

_LIBRARY_CALLS: Dict[str, Tuple[str, ...]] = {
    "parse_args": ("strcmp",),
    "read_file": ("fopen", "fread", "fclose"),
    "format_record": ("snprintf",),
    "grow_buffer": ("realloc",),
    "print_usage": ("printf", "puts"),
    "compare_keys": ("strcmp",),
    "log_message": ("time", "fprintf"),
}


def _rat_payload(flag: str) -> List[Tuple[str, Callable[[Optional[str]], Tuple[str, ...]], Tuple[str, ...]]]:
    return [
        ("svc_spawn", lambda callee: (
            "int local_c;",
            "local_c = fork();",
            "if (local_c == 0) {",
            *((f"  local_c = @{callee}();",) if callee else ("  local_c = 3;",)),
            "  dup2(local_c,0);",
            "  dup2(local_c,1);",
            "  execve(\"/bin/sh\",(char **)0x0,(char **)0x0);",
            "}",
            "return 0;",
        ), ("fork", "dup2", "execve")),
        ("svc_connect", lambda callee: (
            "int local_c;",
            "sockaddr_in local_28;",
            "local_c = socket(2,1,0);",
            "local_28.sin_port = htons(4444);",
            "connect(local_c,(sockaddr *)&local_28,0x10);",
            "dup2(local_c,2);",
            *((f"@{callee}(local_c);",) if callee else ()),
            "return local_c;",
        ), ("socket", "htons", "connect", "dup2")),
        ("svc_beacon", lambda callee: (
            "int local_c;",
            "local_c = socket(2,2,0);",
            f"sendto(local_c,\"{flag}\",8,0,(sockaddr *)&DAT_00605020,0x10);",
            "return 0;",
        ), ("socket", "sendto")),
    ]


def _botnet_payload(flag: str) -> List[Tuple[str, Callable[[Optional[str]], Tuple[str, ...]], Tuple[str, ...]]]:
    return [
        ("svc_register", lambda callee: (
            "int local_c;",
            "char local_118 [256];",
            "local_c = socket(2,1,0);",
            "connect(local_c,(sockaddr *)&DAT_00605040,0x10);",
            "while (true) {",
            "  sendto(local_c,\"ping\",4,0,(sockaddr *)0x0,0);",
            "  recv(local_c,local_118,0x100,0);",
            *((f"  @{callee}(local_118);",) if callee else ()),
            "  sleep(60);",
            "}",
        ), ("socket", "connect", "sendto", "recv", "sleep")),
        ("svc_dispatch", lambda callee: (
            "uint local_c;",
            "local_c = atoi((char *)(param_1 + 4));",
            *((f"@{callee}(param_1,local_c);",) if callee else ()),
            "sendto(DAT_00605060,\"done\",4,0,(sockaddr *)0x0,0);",
            "return 0;",
        ), ("atoi", "sendto")),
        ("svc_flood", lambda callee: (
            "int local_c;",
            "int local_10;",
            "local_c = socket(2,2,0x11);",
            "for (local_10 = 0; local_10 < param_2; local_10 = local_10 + 1) {",
            "  sendto(local_c,&DAT_00606000,0x200,0,(sockaddr *)param_1,0x10);",
            "}",
            "return 0;",
        ), ("socket", "sendto")),
    ]


def _rware_payload(flag: str) -> List[Tuple[str, Callable[[Optional[str]], Tuple[str, ...]], Tuple[str, ...]]]:
    return [
        ("svc_walk", lambda callee: (
            "DIR *local_18;",
            "dirent *local_10;",
            "local_18 = opendir(\"/home\");",
            "while (local_10 = readdir(local_18), local_10 != (dirent *)0x0) {",
            *((f"  @{callee}(local_10->d_name);",) if callee else ()),
            "  rename(local_10->d_name,\".encrypted\");",
            "}",
            "return 0;",
        ), ("opendir", "readdir", "rename")),
        ("svc_seal", lambda callee: (
            "int local_c;",
            "AES_KEY local_108;",
            "local_c = fork();",
            "AES_set_encrypt_key(&DAT_00605080,0x100,&local_108);",
            "AES_encrypt((uchar *)param_1,(uchar *)param_1,&local_108);",
            *((f"@{callee}(param_1);",) if callee else ()),
            "return local_c;",
        ), ("fork", "AES_set_encrypt_key", "AES_encrypt")),
        ("svc_note", lambda callee: (
            "DIR *local_18;",
            "local_18 = opendir((char *)param_1);",
            "fputs(\"your files were encrypted\",(FILE *)local_18);",
            "return 0;",
        ), ("opendir", "fputs")),
    ]


_PAYLOADS = {
    "rat": _rat_payload,
    "botnet": _botnet_payload,
    "rware": _rware_payload,
}


class SyntheticFunction:
    """A function of a synthetic program, calls to other functions are written as "@symbol"."""

    def __init__(self, symbol: str, address: int, body: Tuple[str, ...], library_calls: Tuple[str, ...] = ()):
        self.symbol = symbol
        self.address = address
        self.body = tuple(body)
        self.library_calls = tuple(library_calls)

    @property
    def display_name(self) -> str:
        return f"{DECOMPILER_FUNCTION_PREFIX}{self.address:x}"

    def references(self) -> List[str]:
        found: List[str] = []
        for line in self.body:
            for symbol in _REFERENCE.findall(line):
                if symbol not in found:
                    found.append(symbol)
        return found


class SyntheticProgram:
    def __init__(self, name: str, description: str, version: str):
        self.name = name
        self.description = description
        self.version = version
        self.functions: Dict[str, SyntheticFunction] = {}
        self.changelog: List[str] = []
        self.next_address = BASE_ADDRESS

    def copy(self, version: Optional[str] = None) -> "SyntheticProgram":
        program = SyntheticProgram(self.name, self.description, version or self.version)
        program.functions = dict(self.functions)
        program.next_address = self.next_address
        return program

    def place(self, symbol: str, body: Sequence[str], library_calls: Sequence[str] = ()) -> SyntheticFunction:
        """Adds or replaces a function at a fresh address."""
        function = SyntheticFunction(symbol, self.next_address, tuple(body), tuple(library_calls))
        self.next_address += 0x10 * (len(function.body) + 4)
        self.functions[symbol] = function
        return function

    def render(self, symbol: str) -> str:
        function = self.functions[symbol]
        body = [
            "  " + _REFERENCE.sub(lambda match: self.functions[match.group(1)].display_name, line)
            for line in function.body
        ]
        return "\n".join([f"undefined8 {function.display_name}(long param_1,long param_2)", "{", *body, "}"])

    def callees(self, symbol: str) -> Tuple[str, ...]:
        function = self.functions[symbol]
        internal = [self.functions[reference].display_name for reference in function.references()]
        return tuple(dict.fromkeys(internal + list(function.library_calls)))

    def meta(self) -> BinaryMeta:
        image = "\n".join(self.render(symbol) for symbol in sorted(self.functions))
        return BinaryMeta(
            name=self.name,
            version=self.version,
            content_hash=sha256_hex(image),
            project_description=self.description,
            changelog="\n".join(f"- {entry}" for entry in self.changelog) or None,
        )


def _initial_program(rng: random.Random, name: str, description: str) -> SyntheticProgram:
    program = SyntheticProgram(name, description, "1.0.0")
    symbols = sorted(rng.sample(sorted(_BASE_TEMPLATES), 5))
    for symbol in symbols:
        program.place(symbol, _BASE_TEMPLATES[symbol], _LIBRARY_CALLS.get(symbol, ()))
    main_body = ["int local_c;", "local_c = 0;"] + [f"@{symbol}(param_1,param_2);" for symbol in symbols] + ["return local_c;"]
    program.place("main", main_body)
    return program


def _tweak_constant(rng: random.Random, program: SyntheticProgram) -> Optional[str]:
    candidates = [
        (symbol, index)
        for symbol, function in sorted(program.functions.items())
        for index, line in enumerate(function.body)
        if _DECIMAL.search(line) and "@" not in line
    ]
    if not candidates:
        return None
    symbol, index = rng.choice(candidates)
    function = program.functions[symbol]
    line = function.body[index]
    changed = _DECIMAL.sub(lambda match: str(int(match.group(1)) + rng.randint(1, 9)), line, count=1)
    body = function.body[:index] + (changed,) + function.body[index + 1:]
    program.place(symbol, body, function.library_calls)
    return f"Adjust a constant in {symbol}"


def _rename_local(rng: random.Random, program: SyntheticProgram) -> Optional[str]:
    candidates = sorted(
        symbol for symbol, function in program.functions.items()
        if any(_LOCAL.search(line) for line in function.body)
    )
    if not candidates:
        return None
    symbol = rng.choice(candidates)
    function = program.functions[symbol]
    used = sorted({name for line in function.body for name in _LOCAL.findall(line)})
    old = rng.choice(used)
    new = old
    while new in used:
        new = f"local_{rng.randrange(0x10, 0x200, 8):x}"
    body = tuple(re.sub(rf"\b{old}\b", new, line) for line in function.body)
    program.place(symbol, body, function.library_calls)
    return f"Refactor {symbol}"


def _add_helper(rng: random.Random, program: SyntheticProgram) -> Optional[str]:
    index = 1
    while f"helper_{index}" in program.functions:
        index += 1
    helper = f"helper_{index}"
    program.place(helper, (
        "int local_c;",
        f"local_c = (int)param_1 * {rng.randint(2, 9)} + {rng.randint(1, 99)};",
        "if (local_c < 0) {",
        "  local_c = -local_c;",
        "}",
        f"return local_c % {rng.randint(10, 97)};",
    ))
    caller_symbol = rng.choice(sorted(symbol for symbol in program.functions if symbol != helper))
    caller = program.functions[caller_symbol]
    body = caller.body[:-1] + (f"@{helper}({rng.randint(1, 99)});",) + caller.body[-1:]
    program.place(caller_symbol, body, caller.library_calls)
    return f"Add {helper} used by {caller_symbol}"


def _remove_helper(rng: random.Random, program: SyntheticProgram) -> Optional[str]:
    helpers = sorted(symbol for symbol in program.functions if symbol.startswith("helper_"))
    if not helpers:
        return None
    helper = rng.choice(helpers)
    del program.functions[helper]
    for symbol, function in sorted(program.functions.items()):
        if f"@{helper}(" in "".join(function.body):
            body = tuple(line for line in function.body if f"@{helper}(" not in line)
            program.place(symbol, body, function.library_calls)
    return f"Remove unused {helper}"


_BENIGN_EDITS = (_tweak_constant, _rename_local, _add_helper, _remove_helper)


def _benign_update(rng: random.Random, program: SyntheticProgram, version: str, edits: int) -> SyntheticProgram:
    updated = program.copy(version)
    applied = 0
    while applied < edits:
        entry = rng.choice(_BENIGN_EDITS)(rng, updated)
        if entry:
            updated.changelog.append(entry)
            applied += 1
    return updated


def _inject(rng: random.Random, program: SyntheticProgram, family: str) -> Tuple[SyntheticProgram, List[str]]:
    """
    Adds a payload chain and wires its entry into `main` behind an option nobody else passes.

    Returns:
        the injected program and the payload symbols.
    """
    injected = program.copy()
    injected.changelog = list(program.changelog)
    flag = f"--{rng.choice(['svc', 'dbg', 'diag'])}-{rng.randrange(0x1000, 0xffff):x}"
    chain = _PAYLOADS[family](flag)[:rng.randint(1, 3)]
    symbols = [symbol for symbol, _, _ in chain]
    # callees first so every placed function only references placed ones
    for position in reversed(range(len(chain))):
        symbol, template, library_calls = chain[position]
        callee = symbols[position + 1] if position + 1 < len(symbols) else None
        injected.place(symbol, template(callee), library_calls)

    main = injected.functions["main"]
    trigger = (
        f"if ((1 < param_1) && (strcmp(*(char **)(param_2 + 8),\"{flag}\") == 0)) {{",
        f"  @{symbols[0]}();",
        "}",
    )
    injected.place("main", main.body[:-1] + trigger + main.body[-1:], main.library_calls + ("strcmp",))
    return injected, symbols


def diff_programs(old: SyntheticProgram, new: SyntheticProgram) -> List[FunctionRecord]:
    """
    The function-level diff of two program versions, matched by symbol as a perfect binary differ would.
    """
    records: List[FunctionRecord] = []
    for symbol in sorted(set(old.functions) & set(new.functions)):
        before, after = old.functions[symbol], new.functions[symbol]
        if before.body == after.body and before.library_calls == after.library_calls:
            continue
        records.append(FunctionRecord(
            kind=FunctionKind.MODIFIED,
            old_address=f"{before.address:x}",
            new_address=f"{after.address:x}",
            display_name=after.display_name,
            code_old=old.render(symbol),
            code_new=new.render(symbol),
            callees=new.callees(symbol),
        ))
    for symbol in sorted(set(new.functions) - set(old.functions)):
        function = new.functions[symbol]
        records.append(FunctionRecord(
            kind=FunctionKind.ADDED,
            new_address=f"{function.address:x}",
            display_name=function.display_name,
            code_new=new.render(symbol),
            callees=new.callees(symbol),
        ))
    for symbol in sorted(set(old.functions) - set(new.functions)):
        function = old.functions[symbol]
        records.append(FunctionRecord(
            kind=FunctionKind.DELETED,
            old_address=f"{function.address:x}",
            display_name=function.display_name,
            code_old=old.render(symbol),
            callees=old.callees(symbol),
        ))
    return records


def _artifact(old: SyntheticProgram, new: SyntheticProgram, malicious_symbols: Sequence[str] = ()) -> DiffArtifact:
    functions = diff_programs(old, new)
    malicious_names = {new.functions[symbol].display_name for symbol in malicious_symbols}
    return DiffArtifact(
        schema_version=SCHEMA_VERSION,
        old=old.meta(),
        new=new.meta(),
        functions=tuple(functions),
        label=Label.MALICIOUS if malicious_names else Label.BENIGN,
        function_labels={
            function.display_name: Label.MALICIOUS if function.display_name in malicious_names else Label.BENIGN
            for function in functions
        },
    )


class CorpusDiff(BaseModel):
    model_config = ConfigDict(frozen=True)

    file_name: str
    project: str
    family: Optional[str] = None
    artifact: DiffArtifact


def build_corpus(
    seed: int,
    n_projects: int,
    versions_per_project: int,
    inject_rate: float,
    one_slot_per_family: bool = False,
) -> List[CorpusDiff]:
    """
    Builds a synthetic corpus in memory.

    Args:
        seed (int): random seed, equal seeds give equal corpora.
        n_projects (int): number of projects, at most the number of built-in project templates.
        versions_per_project (int): versions per project, consecutive pairs become diffs.
        inject_rate (float): share of injected slots that receive a payload, rounded to whole
            slots; any rate above 0 injects at least one slot.
        one_slot_per_family (bool): instead of one injected slot per version pair, emit one
            injected diff per payload family, ignoring inject_rate.
    Raises:
        ValueError: on out-of-range arguments.
    """
    if not 1 <= n_projects <= len(PROJECTS):
        raise ValueError(f"n_projects must be between 1 and {len(PROJECTS)}")
    if versions_per_project < 1:
        raise ValueError("versions_per_project must be at least 1")
    if not 0.0 <= inject_rate <= 1.0:
        raise ValueError("inject_rate must be in [0, 1]")

    rng = random.Random(seed)
    projects = rng.sample(PROJECTS, n_projects)
    pairs: List[Tuple[str, SyntheticProgram, SyntheticProgram]] = []
    for name, description in sorted(projects):
        program = _initial_program(rng, name, description)
        for minor in range(1, versions_per_project):
            updated = _benign_update(rng, program, f"1.{minor}.0", edits=rng.randint(2, 3))
            pairs.append((name, program, updated))
            program = updated

    if one_slot_per_family:
        slots = [(pair, family) for pair in pairs for family in FAMILIES]
    else:
        injected_count = round(inject_rate * len(pairs))
        if inject_rate > 0 and pairs:
            injected_count = max(1, injected_count)
        injected_indices = set(rng.sample(range(len(pairs)), injected_count))
        offset = rng.randrange(len(FAMILIES))
        families = iter(FAMILIES[(offset + position) % len(FAMILIES)] for position in range(len(pairs)))
        slots = [
            (pair, next(families) if index in injected_indices else None)
            for index, pair in enumerate(pairs)
        ]

    corpus: List[CorpusDiff] = []
    for name, old, new in pairs:
        corpus.append(CorpusDiff(
            file_name=f"{name}_{old.version}_{new.version}_{CLEAN_VARIANT}.json",
            project=name,
            artifact=_artifact(old, new),
        ))
    for (name, old, new), family in slots:
        if family is None:
            rebuild = _benign_update(rng, new, new.version, edits=1)
            rebuild.changelog = list(new.changelog)
            corpus.append(CorpusDiff(
                file_name=f"{name}_{old.version}_{new.version}_{REBUILD_VARIANT}.json",
                project=name,
                artifact=_artifact(old, rebuild),
            ))
            continue
        injected, symbols = _inject(rng, new, family)
        corpus.append(CorpusDiff(
            file_name=f"{name}_{old.version}_{new.version}_{family}.json",
            project=name,
            family=family,
            artifact=_artifact(old, injected, symbols),
        ))

    corpus.sort(key=lambda diff: diff.file_name)
    logger.info(
        f"built corpus of {len(corpus)} diffs, "
        f"{sum(1 for diff in corpus if diff.artifact.label == Label.MALICIOUS)} injected"
    )
    return corpus


class ManifestEntry(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    path: str
    label: Optional[Label] = None
    project: str
    family: Optional[str] = None


class Manifest(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    schema_version: int = SCHEMA_VERSION
    diffs: Tuple[ManifestEntry, ...] = ()


def _family_of(file_name: str, label: Optional[Label]) -> Optional[str]:
    variant = Path(file_name).stem.rsplit("_", 1)[-1]
    if label == Label.MALICIOUS and variant in FAMILIES:
        return variant
    return None


def corpus_manifest(directory: PathLike | str) -> Manifest:
    """
    Lists every artifact of a corpus directory with its label.

    Raises:
        ArtifactError: naming the file if an artifact cannot be read.
    """
    directory = Path(directory)
    entries: List[ManifestEntry] = []
    for path in sorted(directory.glob("*.json")):
        if path.name == CORPUS_MANIFEST_FILE:
            continue
        try:
            artifact = load_artifact(path)
        except (ArtifactError, OSError, UnicodeDecodeError) as e:
            raise ArtifactError(f"cannot read artifact: {e}", path=str(path)) from e
        entries.append(ManifestEntry(
            path=path.name,
            label=artifact.label,
            project=artifact.new.name,
            family=_family_of(path.name, artifact.label),
        ))
    return Manifest(diffs=tuple(entries))


def write_manifest(manifest: Manifest, directory: PathLike | str) -> Path:
    path = Path(directory) / CORPUS_MANIFEST_FILE
    path.write_text(json.dumps(manifest.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8")
    return path


def load_manifest(path: PathLike | str) -> Manifest:
    """
    Raises:
        EvaluationError: if the manifest is missing or malformed.
    """
    path = Path(path)
    try:
        return Manifest.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise EvaluationError(f"cannot read manifest {path}: {e}") from e
    except ValidationError as e:
        raise EvaluationError(f"invalid manifest {path}: {e.errors()[0]['msg']}") from e


def generate_corpus(
    seed: int,
    n_projects: int,
    versions_per_project: int,
    inject_rate: float,
    out_dir: PathLike | str,
    one_slot_per_family: bool = False,
) -> List[Path]:
    """
    Writes a synthetic corpus plus its manifest to a directory.

    Returns:
        List[Path]: the artifact files in manifest order.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus = build_corpus(seed, n_projects, versions_per_project, inject_rate, one_slot_per_family)
    paths = []
    entries = []
    for diff in corpus:
        path = out_dir / diff.file_name
        save_artifact(diff.artifact, path)
        paths.append(path)
        entries.append(ManifestEntry(
            path=diff.file_name,
            label=diff.artifact.label,
            project=diff.project,
            family=diff.family,
        ))
    write_manifest(Manifest(diffs=tuple(entries)), out_dir)
    logger.info(f"wrote {len(paths)} artifacts to {out_dir}")
    return paths
