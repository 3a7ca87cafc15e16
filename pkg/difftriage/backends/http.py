import asyncio
import os
from typing import Any, Awaitable, Callable, Dict, List, Optional

import httpx

from difftriage.backends import LLMBackend
from difftriage.config import BackendConfig
from difftriage.const import CHAT_COMPLETIONS_PATH, ENV_API_KEY, RETRYABLE_STATUS_CODES
from difftriage.errors import BackendAuthenticationError, BackendError, ConfigError
from difftriage.model import ChatMessage, Completion, TokenUsage


class HttpBackend(LLMBackend):
    """
    Client for OpenAI-compatible chat completion endpoints.

    Every request opens its own connection, the instance itself only holds configuration.
    """

    def __init__(
        self,
        config: BackendConfig,
        api_key: Optional[str] = None,
        transport: Optional[httpx.AsyncBaseTransport] = None,
        sleep: Callable[[float], Awaitable[Any]] = asyncio.sleep,
    ):
        """
        Args:
            config (BackendConfig): endpoint, model and sampling settings.
            api_key (Optional[str]): overrides the LLM_API_KEY environment variable.
            transport (Optional[httpx.AsyncBaseTransport]): custom transport, f.e. httpx.MockTransport in tests.
            sleep (Callable): coroutine used to wait between retries.
        Raises:
            ConfigError: if no API key is available.
        """
        api_key = api_key or os.environ.get(ENV_API_KEY)
        if not api_key:
            raise ConfigError(f"environment variable {ENV_API_KEY} is not set")
        self._config = config
        self._api_key = api_key
        self._transport = transport
        self._sleep = sleep
        self.url = f"{config.base_url.rstrip('/')}/{CHAT_COMPLETIONS_PATH}"

    @property
    def model(self) -> str:
        return self._config.model

    def _payload(self, messages: List[ChatMessage]) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "model": self._config.model,
            "messages": [{"role": message.role.value, "content": message.content} for message in messages],
            "temperature": self._config.temperature,
            "top_p": self._config.top_p,
        }
        if self._config.reasoning_effort is not None:
            payload["reasoning_effort"] = self._config.reasoning_effort.value
        return payload

    @staticmethod
    def _parse_response(data: Any) -> Completion:
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise BackendError("response does not contain a completion")
        if not content:
            raise BackendError("response contains an empty completion")
        usage = data.get("usage") or {}
        return Completion(
            reply=content,
            usage=TokenUsage(
                input_tokens=usage.get("prompt_tokens") or 0,
                output_tokens=usage.get("completion_tokens") or 0,
            ),
        )

    async def _post(self, payload: Dict[str, Any]) -> httpx.Response:
        headers = {
            "Authorization": f"Bearer {self._api_key}",
            "content-type": "application/json",
        }
        async with httpx.AsyncClient(timeout=self._config.timeout_seconds, transport=self._transport) as client:
            return await client.post(self.url, headers=headers, json=payload)

    async def _complete(self, messages: List[ChatMessage]) -> Completion:
        payload = self._payload(messages)
        attempt = 0
        while True:
            attempt += 1
            self.logging.debug(f"request {self.url} attempt {attempt}, {len(messages)} message(s)")
            try:
                response = await self._post(payload)
            except httpx.TimeoutException as e:
                error = f"timeout after {self._config.timeout_seconds}s: {e!r}"
            except httpx.TransportError as e:
                error = f"transport failure: {e!r}"
            else:
                if response.status_code in (401, 403):
                    raise BackendAuthenticationError(
                        f"{self.url} rejected the credentials (HTTP {response.status_code})",
                        attempts=attempt,
                    )
                if response.status_code in RETRYABLE_STATUS_CODES:
                    error = f"HTTP {response.status_code}"
                elif response.is_error:
                    raise BackendError(f"{self.url} answered HTTP {response.status_code}", attempts=attempt)
                else:
                    try:
                        data = response.json()
                    except ValueError:
                        raise BackendError("response is not valid JSON", attempts=attempt)
                    completion = self._parse_response(data)
                    self.logging.debug(
                        f"completion after {attempt} attempt(s), "
                        f"{completion.usage.input_tokens} in / {completion.usage.output_tokens} out tokens"
                    )
                    return completion

            if attempt > self._config.max_retries:
                raise BackendError(f"giving up after {attempt} attempt(s): {error}", attempts=attempt)
            delay = self._config.backoff_seconds * 2 ** (attempt - 1)
            self.logging.warning(f"request failed ({error}), retrying in {delay:.1f}s")
            await self._sleep(delay)
