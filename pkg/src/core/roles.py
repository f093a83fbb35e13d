"""Attributes, task roles and the role-map notation.

Responsibilities
----------------
- Strip inline comments  (# …) from role strings taken from settings.ini
- Split a role string into tokens
- Expand marker aliases (↑ / up / main → PRIMARY, …), extendable from
  the [ROLES] section of settings.ini
- Accept both ``dialect:up, gender:down`` and the result-table arrow row
  ``↑ ↓ ✗`` (dialect, gender, age order)
- Enumerate the experiment grid of role maps for a primary attribute
"""
from __future__ import annotations

import re
from enum import Enum

from src.core.constants import AGE_CLASSES, DIALECT_CLASSES, GENDER_CLASSES, ROLE_MARKERS
from src.core.errors import ConfigError

COMMENT_PREFIX = "#"


class Attribute(str, Enum):
    DIALECT = "dialect"
    GENDER  = "gender"
    AGE     = "age"

    @property
    def classes(self) -> tuple[str, ...]:
        return _CLASSES[self]

    @property
    def num_classes(self) -> int:
        return len(_CLASSES[self])

    def index_of(self, label: str) -> int:
        try:
            return _CLASSES[self].index(label)
        except ValueError:
            raise ConfigError(f"unknown {self.value} label {label!r}; expected one of {_CLASSES[self]}") from None


_CLASSES: dict[Attribute, tuple[str, ...]] = {
    Attribute.DIALECT: DIALECT_CLASSES,
    Attribute.GENDER:  GENDER_CLASSES,
    Attribute.AGE:     AGE_CLASSES,
}

ATTRIBUTES: tuple[Attribute, ...] = (Attribute.DIALECT, Attribute.GENDER, Attribute.AGE)


class Role(str, Enum):
    PRIMARY     = "primary"
    ADVERSARIAL = "adversarial"
    OFF         = "off"

    @property
    def marker(self) -> str:
        return ROLE_MARKERS[self.value]


RoleMap = dict[Attribute, Role]

# alias -> canonical role name; keys and values upper-case
DEFAULT_ROLE_SUGAR: dict[str, str] = {
    "↑": "PRIMARY", "UP": "PRIMARY", "MAIN": "PRIMARY", "PRIMARY": "PRIMARY", "+": "PRIMARY",
    "↓": "ADVERSARIAL", "DOWN": "ADVERSARIAL", "ADV": "ADVERSARIAL", "ADVERSARIAL": "ADVERSARIAL",
    "✗": "OFF", "X": "OFF", "OFF": "OFF", "-": "OFF",
}

_SPLIT_RE = re.compile(r"[,\s]+")


# ---------------------------------------------------------------------------
# Public helpers
# ---------------------------------------------------------------------------

def strip_comment(text: str) -> str:
    """Return ``text`` with a trailing ``# …`` comment removed."""
    idx = text.find(COMMENT_PREFIX)
    return text if idx < 0 else text[:idx]


def tokenize(text: str) -> list[str]:
    """Split a role string on commas and whitespace; blank input gives []."""
    stripped = strip_comment(text).strip()
    if not stripped:
        return []
    return [tok for tok in _SPLIT_RE.split(stripped) if tok]


def expand_marker(token: str, sugar_map: dict[str, str] | None = None) -> Role:
    """Map one role marker or alias to a Role."""
    sugar = DEFAULT_ROLE_SUGAR if sugar_map is None else {**DEFAULT_ROLE_SUGAR, **sugar_map}
    canonical = sugar.get(token.upper())
    if canonical is None:
        raise ConfigError(f"unknown role marker {token!r}")
    return Role[canonical]


def parse_roles(text: str, sugar_map: dict[str, str] | None = None) -> RoleMap:
    """Parse a role map; attributes not mentioned are OFF.

    Examples
    --------
    >>> parse_roles("dialect:up, gender:down")[Attribute.GENDER]
    <Role.ADVERSARIAL: 'adversarial'>
    >>> parse_roles("↑ ↓ ✗")[Attribute.DIALECT]
    <Role.PRIMARY: 'primary'>
    """
    tokens = tokenize(text)
    roles: RoleMap = {attr: Role.OFF for attr in ATTRIBUTES}
    if tokens and all(":" not in t and "=" not in t for t in tokens):
        # Arrow row in table order
        if len(tokens) != len(ATTRIBUTES):
            raise ConfigError(f"arrow notation needs {len(ATTRIBUTES)} markers, got {len(tokens)}")
        for attr, tok in zip(ATTRIBUTES, tokens):
            roles[attr] = expand_marker(tok, sugar_map)
    else:
        seen: set[Attribute] = set()
        for tok in tokens:
            name, _, marker = tok.replace("=", ":").partition(":")
            try:
                attr = Attribute(name.strip().lower())
            except ValueError:
                raise ConfigError(f"unknown attribute {name!r} in role map") from None
            if attr in seen:
                raise ConfigError(f"attribute {attr.value} given twice in role map")
            seen.add(attr)
            roles[attr] = expand_marker(marker.strip(), sugar_map)
    validate_roles(roles)
    return roles


def validate_roles(roles: RoleMap) -> Attribute:
    """Check that exactly one attribute is primary and return it."""
    primaries = [a for a in ATTRIBUTES if roles.get(a, Role.OFF) is Role.PRIMARY]
    if len(primaries) != 1:
        raise ConfigError(f"role map needs exactly one primary attribute, got {len(primaries)}")
    return primaries[0]


def adversarial_attributes(roles: RoleMap) -> list[Attribute]:
    return [a for a in ATTRIBUTES if roles.get(a, Role.OFF) is Role.ADVERSARIAL]


def format_roles(roles: RoleMap) -> str:
    """Inverse of parse_roles in the ``attr:role`` form."""
    return ", ".join(f"{a.value}:{roles.get(a, Role.OFF).value}" for a in ATTRIBUTES)


def marker_row(roles: RoleMap) -> list[str]:
    return [roles.get(a, Role.OFF).marker for a in ATTRIBUTES]


def role_grid(primary: Attribute) -> list[RoleMap]:
    """Every off/adversarial combination of the two non-primary attributes.

    Order follows the results table: ✗ ✗, ↓ ✗, ✗ ↓, ↓ ↓ (earlier attribute
    in table order first).
    """
    first, second = (a for a in ATTRIBUTES if a is not primary)
    combos = [(Role.OFF, Role.OFF), (Role.ADVERSARIAL, Role.OFF),
              (Role.OFF, Role.ADVERSARIAL), (Role.ADVERSARIAL, Role.ADVERSARIAL)]
    grid = []
    for r1, r2 in combos:
        roles = {primary: Role.PRIMARY, first: r1, second: r2}
        grid.append({a: roles[a] for a in ATTRIBUTES})
    return grid


def run_slug(roles: RoleMap) -> str:
    """Directory-safe run name, e.g. ``dialect-vs-gender-age`` or ``dialect``."""
    adversarial = adversarial_attributes(roles)
    name = validate_roles(roles).value
    return f"{name}-vs-{'-'.join(a.value for a in adversarial)}" if adversarial else name
