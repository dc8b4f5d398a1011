"""Resource tiers and the benchmark script inventory (ISO 15924 codes)."""

from __future__ import annotations

import enum
import re
from collections.abc import Iterable, Mapping


class ResourceTier(str, enum.Enum):
    HIGH = "High"
    MID = "Mid"
    LOW = "Low"


TIER_ORDER = (ResourceTier.HIGH, ResourceTier.MID, ResourceTier.LOW)

HIGH_SCRIPTS = frozenset({"Latn"})
MID_SCRIPTS = frozenset({"Arab", "Cyrl", "Deva", "Hani", "Jpan", "Hang", "Grek", "Hebr", "Thai"})

# Benchmark inventory with sentence counts per script (16,375 sentences total).
BENCHMARK_COUNTS: dict[str, int] = {
    "Latn": 4000, "Cyrl": 400, "Hani": 400, "Deva": 400, "Arab": 400,
    "Jpan": 100, "Hang": 100, "Grek": 100, "Taml": 100, "Telu": 100, "Thai": 100,
    "Geor": 100, "Gujr": 100, "Guru": 100, "Beng": 100, "Tibt": 100, "Armn": 100,
    "Knda": 100, "Hebr": 100, "Sinh": 100, "Laoo": 100, "Mlym": 100, "Ethi": 100,
    "Thaa": 100, "Orya": 100, "Mymr": 100, "Khmr": 100, "Copt": 100, "Bopo": 100,
    "Cans": 100, "Egyp": 100, "Xsux": 100, "Syrc": 100, "Runr": 100, "Mtei": 100,
    "Brai": 100, "Cher": 100, "Xpeo": 100, "Tglg": 100, "Java": 100, "Bali": 100,
    "Phnx": 100, "Linb": 100, "Vaii": 100, "Tang": 100, "Orkh": 100, "Brah": 100,
    "Lisu": 100, "Shaw": 100, "Goth": 100, "Tfng": 100, "Yiii": 100, "Sylo": 100,
    "Aghb": 100, "Sidd": 75,
    "Lepc": 100, "Limb": 100, "Mand": 100, "Modi": 100, "Mong": 100, "Newa": 100,
    "Nkoo": 100, "Ogam": 100, "Olck": 100, "Hung": 100, "Ital": 100, "Ougr": 100,
    "Phli": 100, "Prti": 100, "Sarb": 100, "Shrd": 100, "Dsrt": 100, "Glag": 100,
    "Gran": 100, "Ugar": 100, "Wara": 100, "Bugi": 100, "Cakm": 100, "Cham": 100,
    "Sund": 100, "Tale": 100, "Talu": 100, "Tavt": 100, "Kali": 100, "Khar": 100,
    "Kthi": 100, "Lana": 100, "Adlm": 100, "Ahom": 100, "Avst": 100, "Bhks": 100,
    "Sgnw": 90, "Soyo": 86, "Saur": 85, "Mahj": 82, "Diak": 79, "Zanb": 76,
    "Tirh": 75, "Nand": 68, "Sunu": 67, "Mani": 65, "Hatr": 63, "Palm": 63,
    "Gonm": 62, "Nbat": 61, "Kits": 60, "Samr": 59, "Elym": 57, "Osge": 48,
    "Armi": 45, "Gong": 43, "Berf": 41, "Osma": 40, "Mult": 38, "Lydi": 35,
    "Sind": 34, "Mroo": 32, "Plrd": 31, "Rjng": 31, "Takr": 30, "Rohg": 28,
    "Dogr": 27, "Cprt": 27, "Nagm": 26, "Kawi": 26, "Batk": 26, "Hano": 25,
    "Lyci": 23, "Lina": 21, "Medf": 21, "Hluw": 21, "Sogd": 18, "Khoj": 17,
    "Narb": 16, "Hmnp": 16, "Toto": 16, "Maka": 15, "Phag": 15, "Wcho": 15,
    "Tnsa": 14, "Hmng": 13, "Perm": 13, "Yezi": 13, "Todr": 12, "Vith": 12,
    "Krai": 12, "Elba": 11, "Mend": 9, "Cari": 9, "Buhd": 8, "Tagb": 8,
    "Nshu": 5, "Bass": 5, "Sogo": 4, "Sora": 3, "Chrs": 2, "Pauc": 1, "Phlp": 1,
}
BENCHMARK_SCRIPTS = frozenset(BENCHMARK_COUNTS)

_ISO15924 = re.compile(r"^[A-Z][a-z]{3}$")


def is_script_code(code: str) -> bool:
    """Syntactic ISO 15924 check: one uppercase letter followed by three lowercase."""
    return bool(_ISO15924.match(code or ""))


def tier_of(script: str) -> ResourceTier:
    if script in HIGH_SCRIPTS:
        return ResourceTier.HIGH
    if script in MID_SCRIPTS:
        return ResourceTier.MID
    return ResourceTier.LOW


def default_tier_table(scripts: Iterable[str] = BENCHMARK_SCRIPTS) -> dict[str, ResourceTier]:
    return {s: tier_of(s) for s in sorted(scripts)}


def load_tier_table(data: Mapping[str, str]) -> dict[str, ResourceTier]:
    """Parse a ``script -> tier name`` mapping (as read from TOML/JSON)."""
    table = {}
    for script, name in data.items():
        if not is_script_code(script):
            raise ValueError(f"not an ISO 15924 code: {script!r}")
        table[script] = ResourceTier(name)
    return table


def scripts_by_tier(table: Mapping[str, ResourceTier]) -> dict[ResourceTier, list[str]]:
    out: dict[ResourceTier, list[str]] = {t: [] for t in TIER_ORDER}
    for script, tier in sorted(table.items()):
        out[tier].append(script)
    return out
