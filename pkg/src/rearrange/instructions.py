"""Instruction-text helpers shared by the scripted backend, planner, and evaluator.

Everything here is deliberately rule-based and deterministic: a noun lexicon
for object extraction, word tokenization for similarity scoring, and
"then"-clause splitting with subject re-attachment for sequential orders.
"""

import re
from typing import List, Optional, Set

# Kitchen-item vocabulary covering the bundled scenes and seed arrangements.
LEXICON = [
    "eggplant",
    "plate",
    "potato",
    "carrot",
    "pineapple",
    "apple",
    "banana",
    "orange",
    "bowl",
    "cup",
    "lemon",
    "pear",
    "tomato",
    "spoon",
    "fork",
    "knife",
    "mug",
]

_PLURALS = {}
for _noun in LEXICON:
    _PLURALS[_noun + "es" if _noun.endswith(("o", "s", "x", "ch", "sh")) else _noun + "s"] = _noun

VERBS = ("put", "place", "move", "set", "stack", "arrange")

# Relation phrases, longest first so "in front of" wins over "in", etc.
RELATION_PHRASES = [
    ("on the right of", "right_of"),
    ("to the right of", "right_of"),
    ("on the left of", "left_of"),
    ("to the left of", "left_of"),
    ("right of", "right_of"),
    ("left of", "left_of"),
    ("in front of", "in_front_of"),
    ("far away from", "far_from"),
    ("far from", "far_from"),
    ("away from", "far_from"),
    ("next to", "beside"),
    ("behind", "behind"),
    ("beside", "beside"),
    ("together", "together"),
    ("on", "on"),
    ("onto", "on"),
    ("in", "on"),
]

_RELATION_RE = re.compile(
    "|".join(r"\b" + re.escape(p) + r"\b" for p, _ in RELATION_PHRASES), re.IGNORECASE
)


def tokenize(text: str) -> List[str]:
    """Lowercase word tokens (alphanumeric runs)."""
    return re.findall(r"[a-z0-9]+", text.lower())


def token_set(text: str) -> Set[str]:
    return set(tokenize(text))


def jaccard_score(a: str, b: str) -> int:
    """round(100 * |A∩B| / |A∪B|) over lowercase word sets; 0 when both empty."""
    sa, sb = token_set(a), token_set(b)
    union = sa | sb
    if not union:
        return 0
    return round(100 * len(sa & sb) / len(union))


def singularize(word: str) -> str:
    """Map a lexicon plural back to its singular; other words pass through."""
    w = word.lower()
    return _PLURALS.get(w, w)


def find_categories(text: str) -> List[str]:
    """Lexicon nouns mentioned in the text, in order of first occurrence."""
    found = []
    for tok in tokenize(text):
        cat = singularize(tok)
        if cat in LEXICON and cat not in found:
            found.append(cat)
    return found


def first_relation_span(text: str) -> Optional[re.Match]:
    """Earliest relation-phrase match in the text, or None."""
    return _RELATION_RE.search(text)


def subject_prefix(clause: str) -> Optional[str]:
    """Leading verb-plus-subject segment of a clause, e.g. "put the eggplant"."""
    m = first_relation_span(clause)
    if m is None:
        return None
    prefix = clause[: m.start()].strip(" ,")
    first = prefix.split(maxsplit=1)
    if not first or first[0].lower() not in VERBS:
        return None
    return prefix


def split_steps(instruction: str) -> List[str]:
    """Split a sequential instruction into self-contained single-relation steps.

    Clauses are separated on "then" boundaries; a continuation that does not
    start with a verb inherits the first clause's verb and subject ("put the
    eggplant on the plate, then beside the plate" becomes two full clauses).
    """
    parts = re.split(r"\s*,?\s*\bthen\b[\s,]*", instruction.strip(), flags=re.IGNORECASE)
    parts = [p.strip(" ,.") for p in parts if p.strip(" ,.")]
    if len(parts) <= 1:
        return parts if parts else [instruction.strip()]
    prefix = subject_prefix(parts[0])
    steps = [parts[0]]
    for cont in parts[1:]:
        head = cont.split(maxsplit=1)[0].lower()
        if head in VERBS or prefix is None:
            steps.append(cont)
        else:
            steps.append(f"{prefix} {cont}")
    return steps
