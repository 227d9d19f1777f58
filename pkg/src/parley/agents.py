"""Opponent implementations.

The default opponent is a deterministic time-dependent landlord: it holds a
per-issue target utility that decays from its best payoff toward a
reservation value along a Boulware-style curve, accepts any human selection
meeting the current target, and otherwise proposes the cheapest option still
above target. It needs no network and replays bit-for-bit.

An external chat-completions endpoint can stand in instead. Its replies must
carry a machine-readable offer block; free text around the block is kept as
a note. The block grammar:

    ```offer
    monthly_rent = 3
    pet_policy = 5
    ```

one line per active issue, option numbers 1..7.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

import httpx

from .domain import NUM_OPTIONS, IssueSpec, Offer, PayoffMatrix, Role

OFFER_BLOCK_RE = re.compile(r"```offer\s*\n(.*?)```", re.DOTALL)
OFFER_LINE_RE = re.compile(r"^\s*([A-Za-z0-9_.-]+)\s*=\s*(-?\d+)\s*$")


class OfferParseError(ValueError):
    """A reply's offer block is missing, ambiguous, or malformed."""


class AgentFailure(RuntimeError):
    """The opponent could not produce a counter-offer; the session aborts."""


class Opponent(Protocol):
    def counter_offer(
        self,
        issues: Sequence[IssueSpec],
        matrices: Sequence[PayoffMatrix],
        turn: int,
        last_human_offer: Offer,
        transcript: Sequence[Offer],
    ) -> Offer: ...

    def describe(self) -> dict: ...


@dataclass(frozen=True)
class ScriptedPolicy:
    """Parameters of the deterministic landlord.

    ``reservations`` maps issue id to the lowest own payoff the landlord
    will settle for; ``beta`` > 1 concedes slowly early and faster near the
    ``horizon`` (the round cap).
    """

    reservations: Mapping[str, float]
    beta: float = 2.0
    horizon: int = 15
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "reservations", dict(self.reservations))
        if self.beta <= 0:
            raise ValueError("beta must be > 0")

    @classmethod
    def for_matrices(
        cls,
        matrices: Sequence[PayoffMatrix],
        reservation_fraction: float = 0.25,
        beta: float = 2.0,
        horizon: int = 15,
        seed: int = 0,
    ) -> "ScriptedPolicy":
        """Reservation at a fixed fraction above each issue's worst payoff."""
        reservations = {}
        for m in matrices:
            lo, hi = min(m.agent_payoffs), max(m.agent_payoffs)
            reservations[m.issue_id] = lo + reservation_fraction * (hi - lo)
        return cls(reservations=reservations, beta=beta, horizon=horizon, seed=seed)

    def target_utility(self, matrix: PayoffMatrix, turn: int) -> float:
        u_max = max(matrix.agent_payoffs)
        u_res = min(self.reservations.get(matrix.issue_id, u_max), u_max)
        progress = min(1.0, max(0.0, turn / self.horizon))
        return u_max - (u_max - u_res) * progress**self.beta


def scripted_counter_offer(
    policy: ScriptedPolicy,
    matrices: Sequence[PayoffMatrix],
    turn: int,
    last_human_offer: Offer,
) -> Offer:
    """Deterministic counter-offer at round ``turn`` (0-based).

    Per issue: accept the human's selection when its own payoff meets the
    current target, otherwise propose the option whose own payoff is closest
    to the target without dipping below it (ties break toward the lower
    option index).
    """
    selections: dict[str, int] = {}
    for matrix in matrices:
        target = policy.target_utility(matrix, turn)
        human_pick = last_human_offer.selections[matrix.issue_id]
        if matrix.agent_payoffs[human_pick] >= target:
            selections[matrix.issue_id] = human_pick
            continue
        candidates = [
            (payoff, idx)
            for idx, payoff in enumerate(matrix.agent_payoffs)
            if payoff >= target
        ]
        # u_max >= target always, so candidates is never empty
        _, best_idx = min(candidates)
        selections[matrix.issue_id] = best_idx
    return Offer(proposer=Role.AGENT, selections=selections)


@dataclass
class ScriptedAgent:
    policy: ScriptedPolicy

    def counter_offer(
        self,
        issues: Sequence[IssueSpec],
        matrices: Sequence[PayoffMatrix],
        turn: int,
        last_human_offer: Offer,
        transcript: Sequence[Offer],
    ) -> Offer:
        return scripted_counter_offer(self.policy, matrices, turn, last_human_offer)

    def describe(self) -> dict:
        return {
            "kind": "scripted",
            "reservations": dict(self.policy.reservations),
            "beta": self.policy.beta,
            "horizon": self.policy.horizon,
            "seed": self.policy.seed,
        }


def format_offer(offer: Offer, issue_order: Sequence[str] | None = None) -> str:
    """Render an offer as its wire block, note text first."""
    order = list(issue_order) if issue_order is not None else sorted(offer.selections)
    lines = [f"{issue_id} = {offer.selections[issue_id] + 1}" for issue_id in order]
    block = "```offer\n" + "\n".join(lines) + "\n```"
    return f"{offer.note}\n{block}" if offer.note else block


def parse_offer(message: str, issues: Sequence[IssueSpec], proposer: Role = Role.AGENT) -> Offer:
    """Extract the structured offer from a message.

    Exactly one fenced ``offer`` block must be present, with one
    ``issue_id = option`` line (1-based option numbers) per active issue.
    Everything outside the block is preserved as the offer's note.
    """
    blocks = OFFER_BLOCK_RE.findall(message)
    if not blocks:
        raise OfferParseError("no offer block found")
    if len(blocks) > 1:
        raise OfferParseError("ambiguous offer: multiple offer blocks")
    known = {spec.issue_id for spec in issues}
    selections: dict[str, int] = {}
    for raw_line in blocks[0].splitlines():
        line = raw_line.strip()
        if not line:
            continue
        match = OFFER_LINE_RE.match(line)
        if not match:
            raise OfferParseError(f"malformed offer line: {line!r}")
        issue_id, number = match.group(1), int(match.group(2))
        if issue_id not in known:
            raise OfferParseError(f"unknown issue in offer line: {line!r}")
        if issue_id in selections:
            raise OfferParseError(f"duplicate issue in offer line: {line!r}")
        if not (1 <= number <= NUM_OPTIONS):
            raise OfferParseError(f"option out of range 1..{NUM_OPTIONS}: {line!r}")
        selections[issue_id] = number - 1
    missing = sorted(known - set(selections))
    if missing:
        raise OfferParseError(f"offer missing issue(s): {missing}")
    note = OFFER_BLOCK_RE.sub("", message).strip()
    return Offer(proposer=proposer, selections=selections, note=note)


DEFAULT_SYSTEM_PROMPT = (
    "You are the landlord in a property rental negotiation. Maximize your own "
    "utility using only your private payoff table below. Do not drift toward "
    "compromise or fairness unless it raises your score, and do not anchor on "
    "middle options without a strategic reason. Justify each move briefly.\n\n"
    "Reply to every message with exactly one fenced offer block of the form\n"
    "```offer\nissue_id = option_number\n```\n"
    "covering every issue with option numbers 1..7. Repeat the tenant's exact "
    "selections to accept their offer."
)

DEFAULT_USER_PROMPT = (
    "Your private payoff table:\n{payoff_table}\n\n"
    "Conversation so far:\n{transcript}\n\n"
    "It is turn {turn}. Propose the counter-offer that maximizes your total "
    "payoff, considering trade-offs across all issues."
)


@dataclass
class LLMClientConfig:
    """Connection and sampling settings for an external negotiator.

    Temperature and the token limit are fixed for the whole session. The API
    key is read from the named environment variable, never stored.
    """

    endpoint: str
    model: str
    temperature: float = 0.2
    max_tokens: int = 128
    system_prompt: str = DEFAULT_SYSTEM_PROMPT
    user_prompt: str = DEFAULT_USER_PROMPT
    timeout_s: float = 30.0
    api_key_env: str = "PARLEY_LLM_API_KEY"


MAX_PARSE_RETRIES = 2


@dataclass
class LLMAgent:
    """Chat-completions-backed landlord honoring the offer-block protocol."""

    config: LLMClientConfig
    transport: httpx.BaseTransport | None = field(default=None, repr=False)

    def _payoff_table(self, issues: Sequence[IssueSpec], matrices: Sequence[PayoffMatrix]) -> str:
        by_id = {m.issue_id: m for m in matrices}
        lines = []
        for spec in issues:
            payoffs = by_id[spec.issue_id].agent_payoffs
            cells = ", ".join(
                f"{i + 1}:{label}={payoff:g}"
                for i, (label, payoff) in enumerate(zip(spec.option_labels, payoffs))
            )
            lines.append(f"{spec.issue_id}: {cells}")
        return "\n".join(lines)

    def _render_transcript(self, transcript: Sequence[Offer], issue_order: Sequence[str]) -> str:
        if not transcript:
            return "(no prior messages)"
        lines = []
        for offer in transcript:
            who = "Tenant" if offer.proposer is Role.HUMAN else "You"
            lines.append(f"{who}:\n{format_offer(offer, issue_order)}")
        return "\n".join(lines)

    def _request_payload(self, system: str, user: str) -> dict:
        return {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }

    def counter_offer(
        self,
        issues: Sequence[IssueSpec],
        matrices: Sequence[PayoffMatrix],
        turn: int,
        last_human_offer: Offer,
        transcript: Sequence[Offer],
    ) -> Offer:
        issue_order = [spec.issue_id for spec in issues]
        user = self.config.user_prompt.format(
            payoff_table=self._payoff_table(issues, matrices),
            transcript=self._render_transcript(transcript, issue_order),
            turn=turn + 1,
        )
        payload = self._request_payload(self.config.system_prompt, user)
        headers = {}
        api_key = os.environ.get(self.config.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        last_error: Exception | None = None
        with httpx.Client(
            transport=self.transport, timeout=self.config.timeout_s
        ) as client:
            for _ in range(1 + MAX_PARSE_RETRIES):
                try:
                    response = client.post(self.config.endpoint, json=payload, headers=headers)
                    response.raise_for_status()
                    content = response.json()["choices"][0]["message"]["content"]
                except (httpx.HTTPError, KeyError, IndexError, json.JSONDecodeError) as exc:
                    raise AgentFailure(f"negotiator endpoint failed: {exc}") from exc
                try:
                    return parse_offer(content, issues)
                except OfferParseError as exc:
                    last_error = exc
        raise AgentFailure(f"negotiator sent no parseable offer after retries: {last_error}")

    def describe(self) -> dict:
        return {
            "kind": "llm",
            "endpoint": self.config.endpoint,
            "model": self.config.model,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }
