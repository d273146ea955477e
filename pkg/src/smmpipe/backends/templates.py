"""Prompt templates and strict single-character response parsing.

The built-in registry ships the task prompts used for zero-shot runs, addressable
by dotted name (``task3.two_stage.gate``, ``task5.and.condition1``, ...).
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Optional

from ..errors import MalformedResponse

DELIMITER = "\n\n"
_QUOTES = "\"'"


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    instruction: str
    allowed_outputs: frozenset
    output_to_label: MappingProxyType
    fallback_label: Optional[int] = None

    def __post_init__(self):
        if not self.instruction or not self.instruction.strip():
            raise ValueError(f"template {self.name!r}: instruction must be non-empty")
        allowed = frozenset(self.allowed_outputs)
        if not allowed:
            raise ValueError(f"template {self.name!r}: allowed_outputs is empty")
        if any(len(ch) != 1 for ch in allowed):
            raise ValueError(f"template {self.name!r}: outputs must be single characters")
        mapping = {str(k): int(v) for k, v in dict(self.output_to_label).items()}
        if set(mapping) != allowed:
            raise ValueError(
                f"template {self.name!r}: output_to_label keys {sorted(mapping)} "
                f"must equal allowed_outputs {sorted(allowed)}"
            )
        object.__setattr__(self, "allowed_outputs", allowed)
        object.__setattr__(self, "output_to_label", MappingProxyType(mapping))
        if self.fallback_label is not None and self.fallback_label not in mapping.values():
            raise ValueError(f"template {self.name!r}: fallback label {self.fallback_label} "
                             f"is not an output label")

    @classmethod
    def digits(cls, name, instruction, labels, fallback_label=None):
        """Template whose allowed outputs are the decimal digits of ``labels``."""
        return cls(name, instruction, frozenset(str(l) for l in labels),
                   {str(l): l for l in labels}, fallback_label)

    @property
    def labels(self) -> frozenset:
        return frozenset(self.output_to_label.values())


def render_prompt(template: PromptTemplate, sample) -> str:
    text = sample.text if hasattr(sample, "text") else str(sample)
    return template.instruction + DELIMITER + text


def parse_response(raw, template: PromptTemplate) -> int:
    if raw is None:
        raise MalformedResponse(raw, template.allowed_outputs)
    s = raw.strip()
    while len(s) >= 2 and s[0] == s[-1] and s[0] in _QUOTES:
        s = s[1:-1].strip()
    if len(s) == 1 and s in template.allowed_outputs:
        return template.output_to_label[s]
    raise MalformedResponse(raw, template.allowed_outputs)


_T3_OUTDOOR = "What impact did outdoor spaces or activities have on the user's mental health ?"

_T5_PREAMBLE = (
    "The tweets already mention at least one of the following: attention-deficit/hyperactivity "
    "disorder (ADHD), autism spectrum disorders (ASD), delayed speech (speech disorder), or asthma. "
    "In some cases, the tweets discuss hypothetical cases or the possibility of having the condition."
)
_T5_TAIL = "In all other cases, respond with a '0'. Respond with only one character ('0'/'1') and nothing else."

_BUILTINS = [
    ("task3.direct", (0, 1, 2, 3), 0,
     _T3_OUTDOOR + " Respond only with a 1 for positive or 2 for neutral or 3 for negative or 0 for "
     "no mention. Only one character (1/2/3/0) nothing else."),
    ("task3.finetuned", (0, 1, 2, 3), 0,
     _T3_OUTDOOR + " Respond only with a 1 for positive or 2 for neutral or 3 for negative or 0 for "
     "no mention. Only one character (1/2/3/0) nothing else"),
    ("task3.two_stage.gate", (0, 1), 0,
     "Did outdoor spaces or activities get mentioned? Respond only with a 1 for yes or 0 for no. "
     "Only one character (0/1) nothing else."),
    ("task3.two_stage.stage2", (1, 2, 3), 2,
     _T3_OUTDOOR + " Respond only with a 1 for positive or 2 for neutral or 3 for negative. "
     "Only one character (1/2/3) nothing else."),
    ("task5.direct", (0, 1), 0,
     _T5_PREAMBLE + " It might be about someone else's child or an adult son/daughter. Respond with "
     "'1' if the tweet explicitly mentions an existing formal diagnosis of one of those conditions "
     "AND it concerns a child/baby AND the child is the user's own. " + _T5_TAIL),
    ("task5.and.condition1", (0, 1), 0,
     _T5_PREAMBLE + " Respond with '1' if the tweet explicitly mentions an existing formal diagnosis "
     "of one of those conditions. " + _T5_TAIL),
    ("task5.and.condition2", (0, 1), 0,
     _T5_PREAMBLE + " Respond with '1' if the tweet explicitly mentions it concerns a child/baby "
     "having one of those conditions. " + _T5_TAIL),
    ("task5.and.condition3", (0, 1), 0,
     _T5_PREAMBLE + " Respond with '1' if the tweet explicitly mentions the child is the user's own "
     "having diagnosed with one of those conditions. " + _T5_TAIL),
    ("task6.direct", (0, 1), 0,
     "Respond only with 0 or 1 and nothing else : based on whether current age of the AUTHOR in "
     "years can be known from the texts. The texts have a two digit number which is likely an age "
     "if not clear. The age needed to know in context is current age of THE author and not someone "
     "else. In some cases formats like 25m , 24f are used where m refers to Male and f refers to "
     "Female."),
    ("task6.or.condition1", (0, 1), 0,
     "Respond only with 0 or 1 and nothing else based on whether the current age of the author was "
     "reported in the given text."),
    ("task6.or.condition2", (0, 1), 0,
     "Respond only with 0 or 1 and nothing else based on whether the current age of the author can "
     "be determined from the given text."),
    ("task6.or.condition3", (0, 1), 0,
     "Respond only with 0 or 1 and nothing else based on whether the current age of the author was "
     "expressed using formats like 25m , 24f are used where 'm' refers to Male and 'f' refers to "
     "Female."),
]

# (name, labels, abstention fallback, instruction); fallbacks are the training-split
# majority class among the labels the prompt can emit
BUILTIN_TEMPLATES = MappingProxyType(
    {name: PromptTemplate.digits(name, text, labels, fallback)
     for name, labels, fallback, text in _BUILTINS}
)


def get_template(name: str) -> PromptTemplate:
    try:
        return BUILTIN_TEMPLATES[name]
    except KeyError:
        raise KeyError(f"unknown prompt template {name!r}") from None
