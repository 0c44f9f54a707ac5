"""Operation traces: in-memory form and text format.

Text format, one operation per line::

    U <value> <priority>
    B <k> <v1> <p1> ... <vk> <pk>
    E
    D <value>

Blank lines and lines starting with ``#`` are ignored.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._kernels import MAX_PRIORITY, OP_BULK, OP_DELETE, OP_EXTRACT, OP_UPDATE
from .errors import DataError, PreconditionError

_CODES = {"U": OP_UPDATE, "B": OP_BULK, "E": OP_EXTRACT, "D": OP_DELETE}


@dataclass
class Trace:
    """Flat operation stream: op ``j`` owns ``values/priorities[offsets[j]:offsets[j]+counts[j]]``."""

    kinds: np.ndarray
    offsets: np.ndarray
    counts: np.ndarray
    values: np.ndarray
    priorities: np.ndarray

    def __len__(self) -> int:
        return int(self.kinds.size)

    @property
    def extract_count(self) -> int:
        return int(np.count_nonzero(self.kinds == OP_EXTRACT))

    @classmethod
    def from_ops(cls, ops) -> "Trace":
        """Build from tuples ``("U", v, p)``, ``("B", [(v, p), ...])``, ``("E",)``, ``("D", v)``."""
        kinds, offsets, counts, values, pris = [], [], [], [], []
        for op in ops:
            code = _CODES[op[0]]
            kinds.append(code)
            offsets.append(len(values))
            if code == OP_UPDATE:
                values.append(int(op[1]))
                pris.append(int(op[2]))
                counts.append(1)
            elif code == OP_BULK:
                batch = list(op[1])
                counts.append(len(batch))
                for v, p in batch:
                    values.append(int(v))
                    pris.append(int(p))
            elif code == OP_DELETE:
                values.append(int(op[1]))
                pris.append(-1)
                counts.append(1)
            else:
                counts.append(0)
        return cls(
            np.array(kinds, np.int8),
            np.array(offsets, np.int64),
            np.array(counts, np.int64),
            np.array(values, np.int64),
            np.array(pris, np.int64),
        )

    def ops(self):
        """Iterate operations as tuples in the ``from_ops`` form."""
        for k, o, c in zip(self.kinds, self.offsets, self.counts):
            if k == OP_UPDATE:
                yield ("U", int(self.values[o]), int(self.priorities[o]))
            elif k == OP_BULK:
                yield ("B", [(int(self.values[o + t]), int(self.priorities[o + t])) for t in range(c)])
            elif k == OP_DELETE:
                yield ("D", int(self.values[o]))
            else:
                yield ("E",)

    def validate(self, d: int | None = None) -> None:
        """Check the replay preconditions; raises PreconditionError with the op index.

        Batches must be strictly increasing by value and hold at most ``d``
        elements; values and priorities must be in range; a value may not be
        updated again once it has been deleted.  Which value an ``E`` returns
        is only known at run time; ``oracle.check_replayable`` covers that.
        """
        retired = set()
        for j, op in enumerate(self.ops()):
            if op[0] == "U":
                _check_element(op[1], op[2], j)
                if op[1] in retired:
                    raise PreconditionError(f"value {op[1]} updated after delete", j)
            elif op[0] == "B":
                batch = op[1]
                if d is not None and len(batch) > d:
                    raise PreconditionError(f"batch of {len(batch)} exceeds d={d}", j)
                for t, (v, p) in enumerate(batch):
                    _check_element(v, p, j)
                    if t and v <= batch[t - 1][0]:
                        raise PreconditionError("batch not strictly increasing by value", j)
                    if v in retired:
                        raise PreconditionError(f"value {v} updated after delete", j)
            elif op[0] == "D":
                if op[1] < 0:
                    raise PreconditionError("negative value", j)
                retired.add(op[1])


def _check_element(v: int, p: int, j: int) -> None:
    if v < 0:
        raise PreconditionError("negative value", j)
    if not 0 <= p <= MAX_PRIORITY:
        raise PreconditionError(f"priority {p} out of range", j)


def parse_trace(text: str) -> Trace:
    ops = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        try:
            nums = [int(x) for x in parts[1:]]
        except ValueError:
            raise DataError(f"non-integer field in {line!r}", lineno) from None
        if tag == "U" and len(nums) == 2:
            ops.append(("U", nums[0], nums[1]))
        elif tag == "E" and not nums:
            ops.append(("E",))
        elif tag == "D" and len(nums) == 1:
            ops.append(("D", nums[0]))
        elif tag == "B" and nums and nums[0] >= 0 and len(nums) == 1 + 2 * nums[0]:
            ops.append(("B", list(zip(nums[1::2], nums[2::2]))))
        else:
            raise DataError(f"malformed operation {line!r}", lineno)
    return Trace.from_ops(ops)


def load_trace(path) -> Trace:
    return parse_trace(Path(path).read_text())


def format_trace(trace: Trace) -> str:
    lines = []
    for op in trace.ops():
        if op[0] == "U":
            lines.append(f"U {op[1]} {op[2]}")
        elif op[0] == "B":
            body = " ".join(f"{v} {p}" for v, p in op[1])
            lines.append(f"B {len(op[1])} {body}".rstrip())
        elif op[0] == "D":
            lines.append(f"D {op[1]}")
        else:
            lines.append("E")
    return "\n".join(lines) + ("\n" if lines else "")


def save_trace(trace: Trace, path) -> None:
    Path(path).write_text(format_trace(trace))
