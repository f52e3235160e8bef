"""Judge backends: a remote chat-completion endpoint and deterministic local mocks.

All backends expose the same two-call surface: analyze() returns the
Stage-I reasoning text, decide() returns the top-k (token, logprob) list
observed at the single generated decision position. Mock backends derive
all randomness per comparison from (seed, question id, system ids), so
they are reproducible and safe under concurrent use.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import random
import threading
import time
from abc import ABC, abstractmethod
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from enum import Enum

import requests

from ragarena.errors import ConfigError, JudgeProtocolError, TransportError
from ragarena.judge.types import JudgeCall
from ragarena.scoring import AnswerCategory, JudgmentToken, category_compare

TokenLogprobs = list[tuple[str, float]]

DEFAULT_API_KEY_ENV = "JUDGE_API_KEY"

# Decision-token masses emitted by the category oracle: winner 0.9 against
# 0.05 each, i.e. a margin of 0.85, comfortably a high-confidence verdict.
_SHARP_WIN = math.log(0.9)
_SHARP_LOSS = math.log(0.05)


class BackendKind(str, Enum):
    REMOTE_ENDPOINT = "remote"
    SCRIPTED = "scripted"
    CATEGORY_ORACLE = "category_oracle"
    NOISY_ORACLE = "noisy_oracle"


@dataclass(frozen=True)
class JudgeBackendDescriptor:
    """Identity and decoding parameters of a judge backend.

    Participates in verdict cache keys, so any field change invalidates
    previously cached judgments.
    """

    kind: BackendKind
    endpoint_url: str | None = None
    model_name: str | None = None
    temperature: float = 0.0
    top_logprobs: int = 20
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.kind is BackendKind.REMOTE_ENDPOINT:
            if not self.endpoint_url or not self.model_name:
                raise ConfigError("remote judge backends require endpoint_url and model_name")
        if self.top_logprobs < 1:
            raise ConfigError("top_logprobs must be at least 1")

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "endpoint_url": self.endpoint_url,
            "model_name": self.model_name,
            "temperature": self.temperature,
            "top_logprobs": self.top_logprobs,
            "seed": self.seed,
        }


class JudgeBackend(ABC):
    """Two-call judge interface; see module docstring."""

    descriptor: JudgeBackendDescriptor

    @abstractmethod
    def analyze(self, call: JudgeCall) -> str:
        """Run Stage I and return the reasoning text."""

    @abstractmethod
    def decide(self, call: JudgeCall) -> TokenLogprobs:
        """Run Stage II and return top-k (token, logprob) at the decision position."""

    def fingerprint(self) -> dict:
        """Cache-key identity; subclasses extend with their own parameters."""
        return self.descriptor.as_dict()


class _TokenBucket:
    """Blocking token-bucket limiter guarding a remote endpoint."""

    def __init__(self, rate: float, capacity: float | None = None) -> None:
        if rate <= 0:
            raise ConfigError("rate limit must be positive")
        self._rate = rate
        self._capacity = capacity if capacity is not None else max(1.0, rate)
        self._tokens = self._capacity
        self._stamp = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self._capacity, self._tokens + (now - self._stamp) * self._rate)
                self._stamp = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self._rate
            time.sleep(wait)


class RemoteBackend(JudgeBackend):
    """Judge served over HTTP as a chat-style completion endpoint.

    The request carries the prompt as a single user message plus the
    descriptor's decoding parameters; the decision call additionally asks
    for top-k per-token log-probabilities. The API credential is read
    from an environment variable and sent as a bearer token.
    """

    def __init__(
        self,
        descriptor: JudgeBackendDescriptor,
        *,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff: float = 0.5,
        analysis_max_tokens: int = 1024,
        rate_limit: float | None = None,
        max_in_flight: int = 8,
        session: requests.Session | None = None,
    ) -> None:
        if descriptor.kind is not BackendKind.REMOTE_ENDPOINT:
            raise ConfigError(f"RemoteBackend requires a remote descriptor, got {descriptor.kind}")
        self.descriptor = descriptor
        self._api_key_env = api_key_env
        self._timeout = timeout
        self._max_retries = max_retries
        self._backoff = backoff
        self._analysis_max_tokens = analysis_max_tokens
        self._bucket = _TokenBucket(rate_limit) if rate_limit is not None else None
        self._in_flight = threading.Semaphore(max_in_flight)
        self._session = session or requests.Session()

    def analyze(self, call: JudgeCall) -> str:
        reply = self._chat(call.prompt, max_tokens=self._analysis_max_tokens, want_logprobs=False)
        try:
            content = reply["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise JudgeProtocolError(f"endpoint reply is missing message content: {exc}") from exc
        if not isinstance(content, str):
            raise JudgeProtocolError("endpoint message content is not text")
        return content

    def decide(self, call: JudgeCall) -> TokenLogprobs:
        reply = self._chat(call.prompt, max_tokens=1, want_logprobs=True)
        try:
            entry = reply["choices"][0]["logprobs"]["content"][0]
            top = entry["top_logprobs"]
            pairs = [(str(item["token"]), float(item["logprob"])) for item in top]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise JudgeProtocolError(
                f"endpoint reply lacks decision-position logprobs: {exc}"
            ) from exc
        if not pairs:
            raise JudgeProtocolError("endpoint returned an empty top-logprobs list")
        return pairs

    def _chat(self, prompt: str, *, max_tokens: int, want_logprobs: bool) -> dict:
        payload: dict = {
            "model": self.descriptor.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.descriptor.temperature,
            "max_tokens": max_tokens,
        }
        if self.descriptor.seed is not None:
            payload["seed"] = self.descriptor.seed
        if want_logprobs:
            payload["logprobs"] = True
            payload["top_logprobs"] = self.descriptor.top_logprobs
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self._api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        last_error = "no attempt made"
        with self._in_flight:
            for attempt in range(self._max_retries):
                if self._bucket is not None:
                    self._bucket.acquire()
                try:
                    response = self._session.post(
                        self.descriptor.endpoint_url,
                        json=payload,
                        headers=headers,
                        timeout=self._timeout,
                    )
                except requests.RequestException as exc:
                    last_error = str(exc)
                else:
                    if response.status_code == 200:
                        try:
                            return response.json()
                        except ValueError as exc:
                            raise JudgeProtocolError(
                                f"endpoint returned non-JSON body: {exc}"
                            ) from exc
                    if response.status_code not in (429,) and response.status_code < 500:
                        raise TransportError(
                            f"endpoint rejected request: HTTP {response.status_code}"
                        )
                    last_error = f"HTTP {response.status_code}"
                if attempt + 1 < self._max_retries:
                    time.sleep(self._backoff * (2**attempt))
        raise TransportError(
            f"endpoint unreachable after {self._max_retries} attempts: {last_error}"
        )


@dataclass(frozen=True)
class ScriptedReply:
    """Canned judge output: an analysis text plus decision-position logprobs."""

    logprobs: tuple[tuple[str, float], ...]
    analysis: str = "scripted analysis"


ScriptFn = Callable[[JudgeCall], ScriptedReply]


class ScriptedBackend(JudgeBackend):
    """Deterministic replay backend for fixtures and tests.

    Accepts a single reply applied to every comparison, a mapping from
    question id to reply (with "*" as fallback), or a callable for full
    control. Counts round trips so cache behavior is observable.
    """

    def __init__(
        self,
        script: ScriptedReply | Mapping[str, ScriptedReply] | ScriptFn,
        *,
        model_name: str = "scripted",
        seed: int | None = None,
    ) -> None:
        self.descriptor = JudgeBackendDescriptor(
            kind=BackendKind.SCRIPTED, model_name=model_name, seed=seed
        )
        self._script = script
        self.analyze_calls = 0
        self.decide_calls = 0

    def _reply(self, call: JudgeCall) -> ScriptedReply:
        if isinstance(self._script, ScriptedReply):
            return self._script
        if callable(self._script):
            return self._script(call)
        reply = self._script.get(call.qa.id) or self._script.get("*")
        if reply is None:
            raise JudgeProtocolError(f"no scripted reply for question {call.qa.id!r}")
        return reply

    def analyze(self, call: JudgeCall) -> str:
        self.analyze_calls += 1
        return self._reply(call).analysis

    def decide(self, call: JudgeCall) -> TokenLogprobs:
        self.decide_calls += 1
        return list(self._reply(call).logprobs)

    def fingerprint(self) -> dict:
        base = self.descriptor.as_dict()
        if isinstance(self._script, ScriptedReply):
            base["script"] = _script_digest({"*": self._script})
        elif isinstance(self._script, Mapping):
            base["script"] = _script_digest(self._script)
        else:
            base["script"] = "dynamic"
        return base


def _script_digest(script: Mapping[str, ScriptedReply]) -> str:
    payload = {
        key: {"analysis": reply.analysis, "logprobs": [list(p) for p in reply.logprobs]}
        for key, reply in sorted(script.items())
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


CategoryProfile = dict[AnswerCategory, float]

# Best-to-worst walk order for inverse-CDF sampling: a shared per-question
# difficulty draw then yields weakly better categories for stochastically
# better profiles, never inverted ones.
_CATEGORY_ORDER = (
    AnswerCategory.FULLY_CORRECT,
    AnswerCategory.PARTIALLY_CORRECT,
    AnswerCategory.INSUFFICIENT,
    AnswerCategory.INCORRECT,
)


def _stable_rng(*parts: object) -> random.Random:
    text = "\x1f".join(str(part) for part in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


class CategoryOracleBackend(JudgeBackend):
    """Synthetic judge drawing answer categories from per-system profiles.

    Each question carries one shared difficulty value; each system's
    category is the inverse-CDF of its profile at that difficulty, so a
    stronger profile never grades below a weaker one on the same
    question. The verdict is the category comparison, optionally
    perturbed to an adjacent outcome with the configured noise
    probability. Difficulties default to hash-random draws keyed on
    (seed, question id); an explicit per-question difficulty map makes
    the noiseless margin structure fully deterministic for planted
    experiments. All other randomness is keyed on (seed, question id,
    system ids) alone, so concurrent use is safe and replays are exact.
    """

    def __init__(
        self,
        profiles: Mapping[str, CategoryProfile],
        noise: float = 0.0,
        seed: int = 0,
        noise_seed: int | None = None,
        difficulties: Mapping[str, float] | None = None,
    ) -> None:
        if not 0.0 <= noise < 0.5:
            raise ConfigError(f"oracle noise must lie in [0, 0.5), got {noise!r}")
        for system_id, profile in profiles.items():
            if not profile:
                raise ConfigError(f"empty category profile for system {system_id!r}")
            total = sum(profile.values())
            if any(p < 0 for p in profile.values()) or abs(total - 1.0) > 1e-9:
                raise ConfigError(
                    f"category profile for system {system_id!r} must sum to 1, got {total!r}"
                )
        if difficulties is not None:
            for qid, value in difficulties.items():
                if not 0.0 <= value < 1.0:
                    raise ConfigError(f"difficulty for question {qid!r} out of [0, 1): {value!r}")
        self._profiles = {sid: dict(profile) for sid, profile in profiles.items()}
        self._noise = noise
        self._seed = seed
        self._noise_seed = noise_seed if noise_seed is not None else seed
        self._difficulties = dict(difficulties) if difficulties is not None else None
        kind = BackendKind.NOISY_ORACLE if noise > 0 else BackendKind.CATEGORY_ORACLE
        self.descriptor = JudgeBackendDescriptor(kind=kind, model_name="category-oracle", seed=seed)

    def _difficulty(self, question_id: str) -> float:
        if self._difficulties is not None:
            try:
                return self._difficulties[question_id]
            except KeyError:
                raise ConfigError(
                    f"no difficulty assigned for question {question_id!r}"
                ) from None
        return _stable_rng(self._seed, "difficulty", question_id).random()

    def sample_category(self, system_id: str, question_id: str) -> AnswerCategory:
        """Category this system earns on this question (position-independent)."""
        try:
            profile = self._profiles[system_id]
        except KeyError:
            raise ConfigError(f"no category profile for system {system_id!r}") from None
        difficulty = self._difficulty(question_id)
        cumulative = 0.0
        for category in _CATEGORY_ORDER:
            cumulative += profile.get(category, 0.0)
            if difficulty < cumulative:
                return category
        return AnswerCategory.INCORRECT

    def _decision(self, call: JudgeCall) -> tuple[JudgmentToken, AnswerCategory, AnswerCategory]:
        cat_first = self.sample_category(call.first.system_id, call.qa.id)
        cat_second = self.sample_category(call.second.system_id, call.qa.id)
        decision = category_compare(cat_first, cat_second)
        if self._noise > 0.0:
            pair = sorted((call.first.system_id, call.second.system_id))
            rng = _stable_rng(self._noise_seed, "noise", call.qa.id, *pair)
            if rng.random() < self._noise:
                decision = self._adjacent(decision, rng, pair, call.first.system_id)
        return decision, cat_first, cat_second

    @staticmethod
    def _adjacent(
        decision: JudgmentToken,
        rng: random.Random,
        pair: list[str],
        first_system: str,
    ) -> JudgmentToken:
        # Outcomes are ordered A - Tie - B: a win degrades to a tie; a tie
        # breaks toward one system, picked by id so both presentation
        # orders perturb to the same winner.
        if decision is not JudgmentToken.TIE:
            return JudgmentToken.TIE
        winner = pair[rng.randrange(2)]
        return JudgmentToken.A if winner == first_system else JudgmentToken.B

    def analyze(self, call: JudgeCall) -> str:
        _, cat_first, cat_second = self._decision(call)
        return (
            f"Graded answer A ({call.first.system_id}) as {cat_first.name} and "
            f"answer B ({call.second.system_id}) as {cat_second.name} "
            f"on question {call.qa.id}."
        )

    def decide(self, call: JudgeCall) -> TokenLogprobs:
        decision, _, _ = self._decision(call)
        logprobs = {token: _SHARP_LOSS for token in ("A", "B", "Tie")}
        logprobs[decision.value] = _SHARP_WIN
        return sorted(logprobs.items(), key=lambda kv: kv[1], reverse=True)

    def fingerprint(self) -> dict:
        base = self.descriptor.as_dict()
        profile_payload = {
            sid: {cat.name: prob for cat, prob in sorted(profile.items())}
            for sid, profile in sorted(self._profiles.items())
        }
        base["profiles"] = hashlib.sha256(
            json.dumps(profile_payload, sort_keys=True).encode("utf-8")
        ).hexdigest()
        base["noise"] = self._noise
        base["noise_seed"] = self._noise_seed
        if self._difficulties is not None:
            base["difficulties"] = hashlib.sha256(
                json.dumps(sorted(self._difficulties.items())).encode("utf-8")
            ).hexdigest()
        return base


def make_category_oracle(
    quality_profiles: Mapping[str, CategoryProfile],
    noise: float = 0.0,
    seed: int = 0,
    noise_seed: int | None = None,
    difficulties: Mapping[str, float] | None = None,
) -> CategoryOracleBackend:
    """Build a synthetic hierarchy judge; see CategoryOracleBackend."""
    return CategoryOracleBackend(
        quality_profiles, noise=noise, seed=seed, noise_seed=noise_seed, difficulties=difficulties
    )


def _profiles_from_config(raw: Mapping[str, Mapping[str, float]]) -> dict[str, CategoryProfile]:
    profiles: dict[str, CategoryProfile] = {}
    for system_id, weights in raw.items():
        try:
            profiles[system_id] = {
                AnswerCategory.from_name(name): float(prob) for name, prob in weights.items()
            }
        except ValueError as exc:
            raise ConfigError(f"bad profile for system {system_id!r}: {exc}") from exc
    return profiles


def _scripted_from_records(records: list[dict]) -> dict[str, ScriptedReply]:
    script: dict[str, ScriptedReply] = {}
    for record in records:
        try:
            qid = record.get("question_id", "*")
            logprobs = tuple((str(t), float(lp)) for t, lp in record["logprobs"])
            script[qid] = ScriptedReply(logprobs, record.get("analysis", "scripted analysis"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad scripted reply record: {exc}") from exc
    return script


def backend_from_config(config: Mapping, base_seed: int | None = None) -> JudgeBackend:
    """Instantiate a backend from its JSON configuration block.

    The block's "kind" selects the implementation; remaining keys are the
    descriptor and backend parameters. An explicit backend seed wins over
    base_seed (the run-level seed).
    """
    try:
        kind = BackendKind(config.get("kind", "remote"))
    except ValueError:
        raise ConfigError(f"unknown backend kind: {config.get('kind')!r}") from None
    seed = config.get("seed", base_seed)

    if kind is BackendKind.REMOTE_ENDPOINT:
        descriptor = JudgeBackendDescriptor(
            kind=kind,
            endpoint_url=config.get("endpoint_url"),
            model_name=config.get("model_name"),
            temperature=float(config.get("temperature", 0.0)),
            top_logprobs=int(config.get("top_logprobs", 20)),
            seed=seed,
        )
        kwargs = {}
        for key in ("timeout", "max_retries", "backoff", "analysis_max_tokens",
                    "rate_limit", "max_in_flight", "api_key_env"):
            if key in config:
                kwargs[key] = config[key]
        return RemoteBackend(descriptor, **kwargs)

    if kind is BackendKind.SCRIPTED:
        records = config.get("script")
        if records is None and "script_path" in config:
            with open(config["script_path"], encoding="utf-8") as handle:
                records = [json.loads(line) for line in handle if line.strip()]
        if not records:
            raise ConfigError("scripted backend needs a 'script' list or 'script_path'")
        return ScriptedBackend(_scripted_from_records(records), seed=seed)

    profiles = config.get("profiles")
    if not profiles:
        raise ConfigError("category oracle backends need a 'profiles' mapping")
    return make_category_oracle(
        _profiles_from_config(profiles),
        noise=float(config.get("noise", 0.0)),
        seed=seed if seed is not None else 0,
        noise_seed=config.get("noise_seed"),
    )
