"""Force-plot style explanation cards for claim predictions.

A card presents one claim at a tier: T shows the text and verdict only,
TSE adds the word-level force plot (base value, output, words colored by
the sign of their attribution), TSESE additionally shows the claim's
source and evidence. Positive attributions push the prediction toward
true and render red; negative push toward fake and render blue; zero
attributions are neutral and never colored.

The displayed output probability is sigmoid(output_logodds), the value
the force plot reconciles to; for forests this can differ slightly from
the mean-of-leaf-probabilities the model reports when classifying.
"""

from __future__ import annotations

import html as html_module
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .corpus import ClaimRecord, FAKE_LABEL, TRUE_LABEL
from .explain import Attribution, attribution_from_dict, attribution_to_dict

TIERS = ("T", "TSE", "TSESE")
FORMATS = ("json", "html", "terminal")
DEFAULT_TOP_K = 15
_UNAVAILABLE = "unavailable"
_BAR_WIDTH = 24

RED = "red"
BLUE = "blue"


class CardError(ValueError):
    """Raised on rendering contract violations."""


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


@dataclass(frozen=True)
class WordContribution:
    """One word's signed pull on the prediction, in log-odds."""

    feature: int
    word: str
    value: float

    @property
    def color(self) -> str:
        return RED if self.value > 0 else BLUE


@dataclass(frozen=True)
class ExplanationCard:
    """Renderable summary of one attributed prediction."""

    claim_id: str
    text: str
    predicted_label: str
    output_probability: float
    base_probability: float
    base_logodds: float
    output_logodds: float
    method: str
    tier: str
    contributions: tuple[WordContribution, ...] = ()
    other_total: float = 0.0
    source: Optional[str] = None
    evidence: Optional[str] = None
    attribution: dict = field(default_factory=dict)


def build_card(
    attribution: Attribution,
    claim: ClaimRecord,
    words: Sequence[str],
    tier: str = "TSE",
    top_k: int = DEFAULT_TOP_K,
) -> ExplanationCard:
    """Assemble a card from an attribution and its word labels.

    The named contributions are the top_k nonzero attributions by
    magnitude (ties broken by feature index); everything outside the top_k
    is aggregated into other_total so base + named + other still reaches
    the output log-odds.
    """
    if tier not in TIERS:
        raise CardError(f"unknown tier {tier!r}; expected one of {TIERS}")
    if len(words) != attribution.phi.shape[0]:
        raise CardError(
            f"{len(words)} word labels for {attribution.phi.shape[0]} features"
        )
    output_probability = _sigmoid(attribution.output_logodds)
    predicted_label = TRUE_LABEL if output_probability >= 0.5 else FAKE_LABEL

    contributions: list[WordContribution] = []
    other = 0.0
    if tier != "T":
        nonzero = np.nonzero(attribution.phi)[0]
        order = sorted(nonzero, key=lambda i: (-abs(float(attribution.phi[i])), int(i)))
        for i in order[:top_k]:
            contributions.append(
                WordContribution(feature=int(i), word=words[int(i)], value=float(attribution.phi[i]))
            )
        other = float(sum(attribution.phi[i] for i in order[top_k:]))

    return ExplanationCard(
        claim_id=claim.id,
        text=claim.text,
        predicted_label=predicted_label,
        output_probability=output_probability,
        base_probability=attribution.base_probability,
        base_logodds=attribution.base_logodds,
        output_logodds=attribution.output_logodds,
        method=attribution.method,
        tier=tier,
        contributions=tuple(contributions),
        other_total=other,
        source=claim.source if tier == "TSESE" else None,
        evidence=claim.evidence if tier == "TSESE" else None,
        attribution=attribution_to_dict(attribution, list(words)) if tier != "T" else {},
    )


def card_to_dict(card: ExplanationCard) -> dict:
    """Lossless JSON form of a card."""
    payload = {
        "claim_id": card.claim_id,
        "text": card.text,
        "predicted_label": card.predicted_label,
        "output_probability": card.output_probability,
        "base_probability": card.base_probability,
        "base_logodds": card.base_logodds,
        "output_logodds": card.output_logodds,
        "method": card.method,
        "tier": card.tier,
        "contributions": [
            {"feature": c.feature, "word": c.word, "value": c.value, "color": c.color}
            for c in card.contributions
        ],
        "other_total": card.other_total,
        "attribution": card.attribution,
    }
    if card.tier == "TSESE":
        payload["source"] = card.source
        payload["evidence"] = card.evidence
    return payload


def card_from_dict(payload: dict) -> ExplanationCard:
    """Inverse of card_to_dict."""
    return ExplanationCard(
        claim_id=payload["claim_id"],
        text=payload["text"],
        predicted_label=payload["predicted_label"],
        output_probability=float(payload["output_probability"]),
        base_probability=float(payload["base_probability"]),
        base_logodds=float(payload["base_logodds"]),
        output_logodds=float(payload["output_logodds"]),
        method=payload["method"],
        tier=payload["tier"],
        contributions=tuple(
            WordContribution(
                feature=int(c["feature"]), word=c["word"], value=float(c["value"])
            )
            for c in payload["contributions"]
        ),
        other_total=float(payload["other_total"]),
        source=payload.get("source"),
        evidence=payload.get("evidence"),
        attribution=payload.get("attribution", {}),
    )


def _terminal_bar(value: float, max_abs: float) -> str:
    if max_abs <= 0:
        return ""
    length = max(1, int(round(abs(value) / max_abs * _BAR_WIDTH)))
    char = "+" if value > 0 else "-"
    return char * length


def render_terminal(card: ExplanationCard) -> str:
    lines = [
        f"claim {card.claim_id}: predicted {card.predicted_label} "
        f"(p_true={card.output_probability:.3f})",
        f"  {card.text}",
    ]
    if card.tier in ("TSE", "TSESE"):
        lines.append(
            f"  base p_true={card.base_probability:.3f} "
            f"(log-odds {card.base_logodds:+.3f}) -> output log-odds "
            f"{card.output_logodds:+.3f}"
        )
        if card.contributions:
            max_abs = max(abs(c.value) for c in card.contributions)
            width = max(len(c.word) for c in card.contributions)
            for c in card.contributions:
                lines.append(
                    f"    {c.word:<{width}}  {c.value:+.4f}  "
                    f"{_terminal_bar(c.value, max_abs)}"
                )
            if card.other_total != 0.0:
                lines.append(f"    {'(other)':<{width}}  {card.other_total:+.4f}")
        else:
            lines.append("    (no word contributions)")
    if card.tier == "TSESE":
        lines.append(f"  source: {card.source if card.source else _UNAVAILABLE}")
        lines.append(f"  evidence: {card.evidence if card.evidence else _UNAVAILABLE}")
    return "\n".join(lines) + "\n"


def render_html(card: ExplanationCard) -> str:
    """Self-contained single-file HTML with inline styles only."""
    esc = html_module.escape
    verdict_color = "#b30000" if card.predicted_label == TRUE_LABEL else "#0047b3"
    parts = [
        "<!DOCTYPE html>",
        '<html lang="en"><head><meta charset="utf-8">',
        f"<title>claim {esc(card.claim_id)}</title></head>",
        '<body style="font-family: sans-serif; max-width: 40em; margin: 2em auto;">',
        f'<h2 style="margin-bottom:0.2em;">claim {esc(card.claim_id)}</h2>',
        f'<p style="font-size:1.1em;">{esc(card.text)}</p>',
        f'<p>predicted: <strong style="color:{verdict_color};">'
        f"{esc(card.predicted_label)}</strong> "
        f"(p_true={card.output_probability:.3f})</p>",
    ]
    if card.tier in ("TSE", "TSESE"):
        parts.append(
            f"<p>base p_true={card.base_probability:.3f} "
            f"(log-odds {card.base_logodds:+.3f}); "
            f"output log-odds {card.output_logodds:+.3f}</p>"
        )
        spans = []
        for c in card.contributions:
            color = "#b30000" if c.color == RED else "#0047b3"
            spans.append(
                f'<span style="color:{color}; font-weight:bold;" '
                f'title="{c.value:+.4f}">{esc(c.word)}</span>'
            )
        if spans:
            parts.append("<p>" + " ".join(spans) + "</p>")
            rows = "".join(
                f'<tr><td style="padding:2px 8px;">{esc(c.word)}</td>'
                f'<td style="padding:2px 8px; text-align:right; '
                f'color:{"#b30000" if c.color == RED else "#0047b3"};">'
                f"{c.value:+.4f}</td></tr>"
                for c in card.contributions
            )
            if card.other_total != 0.0:
                rows += (
                    '<tr><td style="padding:2px 8px;">(other)</td>'
                    f'<td style="padding:2px 8px; text-align:right;">'
                    f"{card.other_total:+.4f}</td></tr>"
                )
            parts.append(
                '<table style="border-collapse:collapse; font-size:0.9em;">'
                + rows
                + "</table>"
            )
        else:
            parts.append("<p>(no word contributions)</p>")
    if card.tier == "TSESE":
        parts.append(f"<p>source: {esc(card.source) if card.source else _UNAVAILABLE}</p>")
        parts.append(
            f"<p>evidence: {esc(card.evidence) if card.evidence else _UNAVAILABLE}</p>"
        )
    parts.append("</body></html>")
    return "\n".join(parts)


def render_card(
    attribution: Attribution,
    claim: ClaimRecord,
    words: Sequence[str],
    tier: str = "TSE",
    format: str = "terminal",
    top_k: int = DEFAULT_TOP_K,
):
    """Render one claim's explanation at the requested tier and format.

    Returns a dict for the json format and a string for html/terminal.
    """
    if format not in FORMATS:
        raise CardError(f"unknown format {format!r}; expected one of {FORMATS}")
    card = build_card(attribution, claim, words, tier, top_k)
    if format == "json":
        return card_to_dict(card)
    if format == "html":
        return render_html(card)
    return render_terminal(card)


def save_card(card_document, path) -> None:
    """Write a rendered card document (dict or string) to a file."""
    from pathlib import Path

    path = Path(path)
    if isinstance(card_document, dict):
        path.write_text(
            json.dumps(card_document, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
    else:
        path.write_text(card_document, encoding="utf-8")
