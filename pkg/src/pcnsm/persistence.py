"""History persistence: line-delimited text with full round-trip precision.

Format::

    pcnsm-history v1 dim=<d> actions=<|A|>
    <t>\t<action>\t<reward>\t<q>\t<o_1> <o_2> ... <o_d>

The action column holds -1 for null-sentinel entries (the first entry of a
session).  Reals are rendered with repr, so load(save(h)) reproduces every
value exactly.
"""

from __future__ import annotations

from .core import NO_ACTION, Experience, History

HEADER_PREFIX = "pcnsm-history v1"


class HistoryFormatError(ValueError):
    """Raised for malformed or mismatched history files."""


def save_history(history, path, action_count):
    with open(path, "w") as fh:
        fh.write(f"{HEADER_PREFIX} dim={history.obs_dim} "
                 f"actions={action_count}\n")
        obs = history.observations
        actions = history.actions
        rewards = history.rewards
        qvalues = history.qvalues
        for i in range(len(history)):
            obs_text = " ".join(repr(float(v)) for v in obs[i])
            fh.write(f"{i + 1}\t{int(actions[i])}\t{float(rewards[i])!r}\t"
                     f"{float(qvalues[i])!r}\t{obs_text}\n")


def load_history(path):
    """Load a persisted history; returns (History, action_count)."""
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        dim, action_count = _parse_header(header, path)
        history = History(dim)
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line:
                raise HistoryFormatError(f"{path}:{lineno}: blank line")
            _load_line(history, line, lineno, path, action_count)
    return history, action_count


def _parse_header(header, path):
    parts = header.split()
    if (len(parts) != 4 or " ".join(parts[:2]) != HEADER_PREFIX
            or not parts[2].startswith("dim=")
            or not parts[3].startswith("actions=")):
        raise HistoryFormatError(f"{path}:1: bad or unsupported header "
                                 f"{header!r}")
    try:
        dim = int(parts[2][4:])
        action_count = int(parts[3][8:])
    except ValueError as exc:
        raise HistoryFormatError(f"{path}:1: bad header numbers") from exc
    if dim < 1 or action_count < 1:
        raise HistoryFormatError(f"{path}:1: bad header numbers")
    return dim, action_count


def _load_line(history, line, lineno, path, action_count):
    fields = line.split("\t")
    if len(fields) != 5:
        raise HistoryFormatError(f"{path}:{lineno}: expected 5 tab-separated "
                                 f"fields, got {len(fields)}")
    try:
        t = int(fields[0])
        action = int(fields[1])
        reward = float(fields[2])
        q = float(fields[3])
        obs = [float(v) for v in fields[4].split()]
    except ValueError as exc:
        raise HistoryFormatError(f"{path}:{lineno}: {exc}") from exc
    if t != len(history) + 1:
        raise HistoryFormatError(f"{path}:{lineno}: time index {t} out of "
                                 f"order (expected {len(history) + 1})")
    if len(obs) != history.obs_dim:
        raise HistoryFormatError(f"{path}:{lineno}: observation has "
                                 f"{len(obs)} components, expected "
                                 f"{history.obs_dim}")
    if action != NO_ACTION and not 0 <= action < action_count:
        raise HistoryFormatError(f"{path}:{lineno}: action index {action} "
                                 f"out of range")
    history.append(Experience(None if action == NO_ACTION else action,
                              obs, reward),
                   initial_q=q, session_boundary=True)
