"""All persistence: PLY point clouds, tree manifests, label datasets, observations.

PLY input may be ASCII or binary little-endian; output is always binary
little-endian with float32 coordinates and uint8 colors, so a write/read
round trip reproduces stored values bit-exactly.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import (CLASS_LABELS, DATASET_HEADER, ColoredPointCloud, LabelDataset,
                   LabeledPointRecord, ManifestEntry, TreeManifest, TreeObservation)
from .errors import FormatError, ParseError, ValidationError

_PLY_SCALAR_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def _parse_ply_header(raw: bytes):
    """Header -> (format, elements, body offset). Elements are
    (name, count, [(prop_name, dtype_code or ('list', count_code, item_code))]).
    """
    end = raw.find(b"end_header")
    if raw[:4].rstrip() != b"ply" or end < 0:
        raise ParseError("not a PLY file (missing 'ply'/'end_header')", line=1)
    newline = raw.find(b"\n", end)
    if newline < 0:
        raise ParseError("no newline after end_header")
    header_text = raw[:newline].decode("ascii", errors="replace")
    body_offset = newline + 1

    fmt = None
    elements = []
    for lineno, line in enumerate(header_text.splitlines(), start=1):
        tokens = line.strip().split()
        if not tokens or tokens[0] in ("ply", "comment", "obj_info", "end_header"):
            continue
        if tokens[0] == "format":
            if len(tokens) != 3:
                raise ParseError(f"malformed format line: {line!r}", line=lineno)
            fmt = tokens[1]
            if fmt not in ("ascii", "binary_little_endian"):
                raise FormatError(f"unsupported PLY format {fmt!r}")
        elif tokens[0] == "element":
            if len(tokens) != 3 or not tokens[2].isdigit():
                raise ParseError(f"malformed element line: {line!r}", line=lineno)
            elements.append((tokens[1], int(tokens[2]), []))
        elif tokens[0] == "property":
            if not elements:
                raise ParseError("property before any element", line=lineno)
            if len(tokens) == 3 and tokens[1] in _PLY_SCALAR_TYPES:
                elements[-1][2].append((tokens[2], _PLY_SCALAR_TYPES[tokens[1]]))
            elif (len(tokens) == 5 and tokens[1] == "list"
                  and tokens[2] in _PLY_SCALAR_TYPES and tokens[3] in _PLY_SCALAR_TYPES):
                elements[-1][2].append(
                    (tokens[4], ("list", _PLY_SCALAR_TYPES[tokens[2]],
                                 _PLY_SCALAR_TYPES[tokens[3]])))
            else:
                raise ParseError(f"malformed property line: {line!r}", line=lineno)
        else:
            raise ParseError(f"unknown header keyword {tokens[0]!r}", line=lineno)
    if fmt is None:
        raise ParseError("missing format line", line=1)
    return fmt, elements, body_offset, header_text


def _header_comments(header_text: str) -> dict[str, str]:
    out = {}
    for line in header_text.splitlines():
        tokens = line.strip().split(None, 1)
        if tokens and tokens[0] == "comment" and len(tokens) == 2 and "=" in tokens[1]:
            key, _, value = tokens[1].partition("=")
            out[key.strip()] = value.strip()
    return out


def read_cloud(path) -> ColoredPointCloud:
    """Read a PLY cloud; points keep file order, unknown properties are ignored."""
    path = Path(path)
    raw = path.read_bytes()
    fmt, elements, body_offset, header_text = _parse_ply_header(raw)

    vertex = next((e for e in elements if e[0] == "vertex"), None)
    if vertex is None:
        raise FormatError(f"{path}: no vertex element")
    _, count, props = vertex
    prop_types = dict(props)
    for name in ("x", "y", "z"):
        if prop_types.get(name) not in ("f4", "f8"):
            raise FormatError(f"{path}: vertex property {name!r} missing or not float")
    for name in ("red", "green", "blue"):
        if prop_types.get(name) != "u1":
            raise FormatError(f"{path}: vertex property {name!r} missing or not 8-bit")

    if fmt == "ascii":
        data = _read_ascii_vertices(raw[body_offset:], elements, path)
    else:
        data = _read_binary_vertices(raw[body_offset:], elements, path)

    xyz = np.stack([data["x"], data["y"], data["z"]], axis=1).astype(np.float32)
    rgb = np.stack([data["red"], data["green"], data["blue"]], axis=1).astype(np.uint8)
    comments = _header_comments(header_text)
    return ColoredPointCloud(
        xyz, rgb,
        source_id=comments.get("source_id", path.stem),
        capture_week=int(comments.get("capture_week", 1)),
    )


def _read_ascii_vertices(body: bytes, elements, path):
    lines = [ln for ln in body.decode("ascii", errors="replace").splitlines()
             if ln.strip()]
    pos = 0
    for name, count, props in elements:
        if name != "vertex":
            pos += count  # one line per row regardless of property kinds
            continue
        rows = lines[pos:pos + count]
        if len(rows) != count:
            raise FormatError(f"{path}: vertex element truncated "
                              f"({len(rows)} of {count} rows)")
        scalar_names = [p for p, t in props if not isinstance(t, tuple)]
        if len(scalar_names) != len(props):
            raise FormatError(f"{path}: list property inside vertex element")
        out = {p: np.empty(count, dtype=np.float64) for p in scalar_names}
        for i, row in enumerate(rows):
            tokens = row.split()
            if len(tokens) < len(props):
                raise FormatError(f"{path}: vertex row {i} has {len(tokens)} values, "
                                  f"expected {len(props)}")
            for (p, _), tok in zip(props, tokens):
                out[p][i] = float(tok)
        return out
    raise FormatError(f"{path}: no vertex element")


def _read_binary_vertices(body: bytes, elements, path):
    offset = 0
    for name, count, props in elements:
        has_list = any(isinstance(t, tuple) for _, t in props)
        if name == "vertex":
            if has_list:
                raise FormatError(f"{path}: list property inside vertex element")
            dtype = np.dtype([(p, "<" + t) for p, t in props])
            nbytes = dtype.itemsize * count
            if len(body) - offset < nbytes:
                raise FormatError(f"{path}: vertex element truncated")
            rec = np.frombuffer(body, dtype=dtype, count=count, offset=offset)
            return {p: rec[p] for p, _ in props}
        if has_list:
            # cannot skip without row-by-row parsing; vertex-first files never hit this
            raise FormatError(f"{path}: list-typed element {name!r} precedes vertex")
        row_size = sum(np.dtype(t).itemsize for _, t in props)
        offset += row_size * count
    raise FormatError(f"{path}: no vertex element")


def write_cloud(cloud: ColoredPointCloud, path) -> None:
    """Write binary little-endian PLY; read_cloud inverts it exactly."""
    path = Path(path)
    n = cloud.n_points
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"comment source_id={cloud.source_id}\n"
        f"comment capture_week={cloud.capture_week}\n"
        f"element vertex {n}\n"
        "property float x\n"
        "property float y\n"
        "property float z\n"
        "property uchar red\n"
        "property uchar green\n"
        "property uchar blue\n"
        "end_header\n"
    )
    rec = np.empty(n, dtype=np.dtype(
        [("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
         ("red", "u1"), ("green", "u1"), ("blue", "u1")]))
    for i, name in enumerate(("x", "y", "z")):
        rec[name] = cloud.xyz[:, i]
    for i, name in enumerate(("red", "green", "blue")):
        rec[name] = cloud.rgb[:, i]
    try:
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(rec.tobytes())
    except OSError as exc:
        raise OSError(f"cannot write cloud to {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Tree manifest: key-value preamble plus two CSV tables ([trees], [clouds]).

_TREE_COLUMNS = ("tree_id", "row", "position_in_row", "leaf_n_percent",
                 "gt_yellow_mass_g", "gt_green_mass_g")
_CLOUD_COLUMNS = ("tree_id", "week", "path")


def _opt_float(token: str) -> float | None:
    return float(token) if token != "" else None


def read_manifest(path) -> TreeManifest:
    """Parse the per-season manifest document."""
    path = Path(path)
    season = ""
    entries: dict[str, ManifestEntry] = {}
    section = None
    table_header: list[str] | None = None
    cloud_rows: list[tuple[str, int, str]] = []

    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in ("trees", "clouds"):
                raise ParseError(f"unknown section [{section}]", line=lineno)
            table_header = None
            continue
        if section is None:
            key, eq, value = line.partition("=")
            if not eq:
                raise ParseError(f"expected 'key = value', got {line!r}", line=lineno)
            if key.strip() == "season":
                season = value.strip()
            continue
        tokens = [t.strip() for t in line.split(",")]
        if table_header is None:
            table_header = tokens
            expected = _TREE_COLUMNS if section == "trees" else _CLOUD_COLUMNS
            if tuple(tokens) != expected:
                raise ParseError(f"[{section}] header must be {','.join(expected)}",
                                 line=lineno)
            continue
        if section == "trees":
            if len(tokens) != len(_TREE_COLUMNS):
                raise ParseError(f"expected {len(_TREE_COLUMNS)} fields", line=lineno)
            tree_id = tokens[0]
            if tree_id in entries:
                raise ValidationError(f"duplicate tree_id {tree_id!r}")
            entries[tree_id] = ManifestEntry(
                tree_id=tree_id, row=int(tokens[1]), position_in_row=int(tokens[2]),
                leaf_n_percent=_opt_float(tokens[3]),
                gt_yellow_mass_g=_opt_float(tokens[4]),
                gt_green_mass_g=_opt_float(tokens[5]),
            )
        else:
            if len(tokens) != len(_CLOUD_COLUMNS):
                raise ParseError(f"expected {len(_CLOUD_COLUMNS)} fields", line=lineno)
            cloud_rows.append((tokens[0], int(tokens[1]), tokens[2]))

    for tree_id, week, cloud_path in cloud_rows:
        if tree_id not in entries:
            raise ValidationError(f"[clouds] references unknown tree_id {tree_id!r}")
        if week in entries[tree_id].cloud_paths:
            raise ValidationError(f"duplicate cloud for tree {tree_id!r} week {week}")
        entries[tree_id].cloud_paths[week] = cloud_path
    return TreeManifest(entries=list(entries.values()), season=season)


def write_manifest(manifest: TreeManifest, path) -> None:
    path = Path(path)
    lines = ["# fallcolor tree manifest", "version = 1"]
    if manifest.season:
        lines.append(f"season = {manifest.season}")
    lines += ["", "[trees]", ",".join(_TREE_COLUMNS)]
    for e in manifest.entries:
        opt = ["" if v is None else repr(float(v))
               for v in (e.leaf_n_percent, e.gt_yellow_mass_g, e.gt_green_mass_g)]
        lines.append(f"{e.tree_id},{e.row},{e.position_in_row}," + ",".join(opt))
    lines += ["", "[clouds]", ",".join(_CLOUD_COLUMNS)]
    for e in manifest.entries:
        for week in sorted(e.cloud_paths):
            lines.append(f"{e.tree_id},{week},{e.cloud_paths[week]}")
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Label dataset: CSV with the fixed 18-name header (label + 17 features).


def write_label_dataset(ds: LabelDataset, path) -> None:
    path = Path(path)
    lines = [",".join(DATASET_HEADER)]
    for rec in ds.rows:
        vals = rec.values()
        fields = [rec.label]
        for col in DATASET_HEADER[1:]:
            v = vals[col]
            fields.append(str(int(v)) if col in ("r", "g", "b") else repr(float(v)))
        lines.append(",".join(fields))
    path.write_text("\n".join(lines) + "\n")


def read_label_dataset(path) -> LabelDataset:
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise FormatError(f"{path}: empty label dataset")
    header = tuple(t.strip() for t in lines[0].split(","))
    if header != DATASET_HEADER:
        raise FormatError(f"{path}: bad header; expected {','.join(DATASET_HEADER)}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = [t.strip() for t in line.split(",")]
        if len(tokens) != len(DATASET_HEADER):
            raise ParseError(f"expected {len(DATASET_HEADER)} fields, got {len(tokens)}",
                             line=lineno)
        label = tokens[0]
        if label not in CLASS_LABELS:
            raise ValidationError(f"line {lineno}: label {label!r} outside {CLASS_LABELS}")
        nums = [float(t) for t in tokens[1:]]
        rows.append(LabeledPointRecord(
            label=label, a_star=nums[0], b_star=nums[1],
            r=int(nums[2]), g=int(nums[3]), b=int(nums[4]),
            eigenvalues=np.array(nums[5:8]),
            eigenvectors=np.array(nums[8:17]).reshape(3, 3),
        ))
    return LabelDataset(rows=rows)


# ---------------------------------------------------------------------------
# Observations table: tree_id,week,y,g,index,ground_truth,leaf_N

_OBS_HEADER = ("tree_id", "week", "y", "g", "index", "ground_truth", "leaf_N")


def write_observations(observations: list[TreeObservation], path) -> None:
    path = Path(path)
    lines = [",".join(_OBS_HEADER)]
    for o in observations:
        gt = "" if o.ground_truth is None else repr(float(o.ground_truth))
        n = "" if o.leaf_n_percent is None else repr(float(o.leaf_n_percent))
        lines.append(f"{o.tree_id},{o.week},{o.yellow_count},{o.green_count},"
                     f"{o.index!r},{gt},{n}")
    path.write_text("\n".join(lines) + "\n")


def read_observations(path) -> list[TreeObservation]:
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines or tuple(t.strip() for t in lines[0].split(",")) != _OBS_HEADER:
        raise FormatError(f"{path}: bad observations header")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = [t.strip() for t in line.split(",")]
        if len(tokens) != len(_OBS_HEADER):
            raise ParseError(f"expected {len(_OBS_HEADER)} fields", line=lineno)
        out.append(TreeObservation(
            tree_id=tokens[0], week=int(tokens[1]),
            yellow_count=int(tokens[2]), green_count=int(tokens[3]),
            index=float(tokens[4]),
            ground_truth=_opt_float(tokens[5]),
            leaf_n_percent=_opt_float(tokens[6]),
        ))
    return out
