import logging
from abc import ABC, abstractmethod
from typing import List

from difftriage.model import ChatMessage, ChatRole, Completion


class LLMBackend(ABC):
    """
    Chat completion backend.

    Implementations keep per-request state only, so one instance can serve any number of
    concurrent requests.
    """
    logging = logging.getLogger(__name__)

    @property
    @abstractmethod
    def model(self) -> str:
        """Name of the model answering the requests, part of every cache key."""

    async def complete(self, messages: List[ChatMessage]) -> Completion:
        """
        Sends a conversation and returns the assistant reply.

        Args:
            messages (List[ChatMessage]): the conversation, ending with a user message.
        Returns:
            Completion: reply text and token usage.
        Raises:
            ValueError: if the conversation is empty or does not end with a user message.
            BackendError: if no completion could be obtained.
        """
        if not messages:
            raise ValueError("conversation must not be empty")
        if messages[-1].role != ChatRole.USER:
            raise ValueError(f"conversation must end with a user message, got {messages[-1].role.value}")
        return await self._complete(messages)

    @abstractmethod
    async def _complete(self, messages: List[ChatMessage]) -> Completion:
        pass
