import csv
import io
import math
import re
import typing as t
from dataclasses import dataclass, field
from pathlib import Path

from app.core.errors import ValidationFailure
from app.schemas.params import SSHParams
from app.schemas.texture import TextureSample

FIXTURES_DIR = Path(__file__).resolve().parent / "fixtures"

BUILTIN_TABLES = {"s1": "table_s1.csv", "s2": "table_s2.csv", "s3": "table_s3.csv"}
BUILTIN_RE = re.compile(r"(?:table_)?(s[123])(?:_(theory|experiment))?")

# "# key: value" metadata lines above the header row
META_RE = re.compile(r"^#\s*([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.*?)\s*$")
# "0.4pi", "0.4π", "1.2 pi" or a plain number
K_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(pi|π)?\s*$")

SOURCES = ("experiment", "theory")


@dataclass
class TextureTable:
    samples: list[TextureSample]
    metadata: dict[str, str] = field(default_factory=dict)
    name: str = ""

    @property
    def v(self) -> float | None:
        return _float_or_none(self.metadata.get("v"))

    @property
    def r(self) -> float | None:
        return _float_or_none(self.metadata.get("r"))

    @property
    def params(self) -> SSHParams | None:
        if self.v is None or self.r is None:
            return None
        gamma = _float_or_none(self.metadata.get("gamma")) or 1.0
        return SSHParams(v=self.v, r=self.r, gamma=gamma)

    @property
    def sign_corrected_after(self) -> float | None:
        """Momentum (radians) after which rows were already sign-flipped."""
        raw = self.metadata.get("sign_corrected_after")
        if raw is None:
            return None
        return parse_k(raw, pi_units=self.metadata.get("k_units", "").strip() in ("pi", "π"))

    def as_measured(self) -> "TextureTable":
        """Undo the stored sign correction: the Im-ordered band as the experiment saw it."""
        cut = self.sign_corrected_after
        if cut is None:
            return self
        samples = [s.flipped() if s.k > cut else s for s in self.samples]
        metadata = {k: v for k, v in self.metadata.items() if k != "sign_corrected_after"}
        return TextureTable(samples=samples, metadata=metadata, name=self.name)


def _float_or_none(value: str | None) -> float | None:
    if value is None or value == "":
        return None
    return float(value)


def parse_k(raw: str, pi_units: bool = False) -> float:
    m = K_RE.match(raw)
    if not m:
        raise ValidationFailure(f"cannot read momentum {raw!r}")
    value = float(m.group(1))
    return value * math.pi if (pi_units or m.group(2)) else value


def _split_comments(text: str) -> tuple[dict[str, str], list[str]]:
    metadata: dict[str, str] = {}
    body: list[str] = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            m = META_RE.match(stripped)
            if m:
                metadata[m.group(1)] = m.group(2)
            continue
        body.append(stripped)
    return metadata, body


def parse_texture_table(text: str, source: str = "experiment", name: str = "") -> TextureTable:
    """Read k, sx, sz [, sx_err, sz_err] rows; ``source="theory"`` picks the *_theory columns."""
    if source not in SOURCES:
        raise ValidationFailure(f"source must be one of {SOURCES}")
    metadata, body = _split_comments(text)
    if not body:
        raise ValidationFailure(f"texture table {name or '<text>'} has no rows")
    reader = csv.DictReader(io.StringIO("\n".join(body)))
    fields = set(reader.fieldnames or [])
    sx_col, sz_col = ("sx_theory", "sz_theory") if source == "theory" else ("sx", "sz")
    missing = {"k", sx_col, sz_col} - fields
    if missing:
        raise ValidationFailure(f"texture table {name or '<text>'} lacks columns {sorted(missing)}")
    pi_units = metadata.get("k_units", "").strip() in ("pi", "π")
    with_errors = source == "experiment" and {"sx_err", "sz_err"} <= fields

    samples: list[TextureSample] = []
    for lineno, row in enumerate(reader, start=2):
        try:
            samples.append(
                TextureSample(
                    k=parse_k(row["k"], pi_units),
                    sx=float(row[sx_col]),
                    sz=float(row[sz_col]),
                    sx_err=float(row["sx_err"]) if with_errors and row.get("sx_err") else None,
                    sz_err=float(row["sz_err"]) if with_errors and row.get("sz_err") else None,
                )
            )
        except (TypeError, ValueError) as exc:
            raise ValidationFailure(f"{name or 'texture table'} row {lineno}: {exc}") from exc

    ks = [s.k for s in samples]
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValidationFailure(f"{name or 'texture table'}: k must be strictly increasing")
    return TextureTable(samples=samples, metadata=metadata, name=name)


def read_texture_table(path: str | Path, source: str = "experiment") -> TextureTable:
    path = Path(path)
    if not path.exists():
        raise ValidationFailure(f"texture table {path} not found")
    return parse_texture_table(path.read_text(encoding="utf-8"), source=source, name=path.stem)


def is_builtin(name: str) -> bool:
    return BUILTIN_RE.fullmatch(name.strip().lower()) is not None


def load_builtin(name: str) -> TextureTable:
    """Reference tables by name: "s2", "table_s2", "table_s2_theory" or "table_s2_experiment"."""
    m = BUILTIN_RE.fullmatch(name.strip().lower())
    if not m:
        raise ValidationFailure(f"unknown built-in table {name!r}; expected one of {sorted(BUILTIN_TABLES)}")
    key, source = m.group(1), m.group(2) or "theory"
    table = read_texture_table(FIXTURES_DIR / BUILTIN_TABLES[key], source=source)
    table.name = f"table_{key}_{source}"
    return table


def format_metadata(metadata: t.Mapping[str, t.Any]) -> str:
    return "".join(f"# {key}: {value}\n" for key, value in metadata.items())


def write_rows(
    path: str | Path,
    columns: t.Sequence[str],
    rows: t.Iterable[t.Mapping[str, t.Any]],
    metadata: t.Mapping[str, t.Any] | None = None,
) -> Path:
    """Columnar text with a "# key: value" metadata block; floats at full precision."""
    path = Path(path)
    buffer = io.StringIO()
    buffer.write(format_metadata(metadata or {}))
    writer = csv.DictWriter(buffer, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: (repr(value) if isinstance(value, float) else value) for key, value in row.items()})
    path.write_text(buffer.getvalue(), encoding="utf-8")
    return path
