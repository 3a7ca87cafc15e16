import logging
from typing import Callable, Generic, List, Optional, TypeVar

from difftriage.backends import LLMBackend
from difftriage.errors import ReplyParseError
from difftriage.model import ChatMessage, ChatRole, TokenUsage

T = TypeVar("T")

REPROMPT_TEMPLATE = (
    "Your previous answer could not be processed: {error}. "
    "Please answer again and follow the requested output format exactly."
)


class Exchange(Generic[T]):
    """
    Outcome of one prompt including its re-prompts.

    Attributes:
        value (Optional[T]): the parsed reply, None if every attempt failed.
        conversation (List[ChatMessage]): all messages, the replies included.
        usage (TokenUsage): tokens of all attempts.
        error (Optional[ReplyParseError]): the last parse error if every attempt failed.
    """

    def __init__(
        self,
        value: Optional[T],
        conversation: List[ChatMessage],
        usage: TokenUsage,
        error: Optional[ReplyParseError] = None,
    ):
        self.value = value
        self.conversation = conversation
        self.usage = usage
        self.error = error

    def unwrap(self) -> T:
        if self.error is not None:
            raise self.error
        return self.value


class TriageModule:
    """Base class of the pipeline stages talking to an LLM backend."""
    logging = logging.getLogger(__name__)

    def __init__(
        self,
        backend: LLMBackend,
    ):
        self._backend: LLMBackend = backend

    @property
    def backend(self) -> LLMBackend:
        return self._backend

    async def _ask(
        self,
        messages: List[ChatMessage],
        parse: Callable[[str], T],
        reprompts: int = 1,
    ) -> Exchange[T]:
        """
        Sends a conversation and parses the reply, re-prompting with the parse error on failure.

        Args:
            messages (List[ChatMessage]): the conversation, ending with a user message.
            parse (Callable[[str], T]): reply parser raising ReplyParseError.
            reprompts (int): number of additional attempts after a parse failure. Defaults to 1.
        Returns:
            Exchange[T]: the parsed value or the last parse error.
        Raises:
            BackendError: transport errors are not retried here.
        """
        conversation = list(messages)
        usage = TokenUsage()
        error: Optional[ReplyParseError] = None
        for attempt in range(reprompts + 1):
            completion = await self._backend.complete(conversation)
            usage = usage + completion.usage
            conversation.append(ChatMessage(role=ChatRole.ASSISTANT, content=completion.reply))
            try:
                return Exchange(parse(completion.reply), conversation, usage)
            except ReplyParseError as e:
                error = e
                self.logging.warning(f"unparseable reply (attempt {attempt + 1}): {e}")
                if attempt < reprompts:
                    conversation.append(ChatMessage(
                        role=ChatRole.USER,
                        content=REPROMPT_TEMPLATE.format(error=e),
                    ))
        return Exchange(None, conversation, usage, error)
