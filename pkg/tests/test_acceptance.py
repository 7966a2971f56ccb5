"""One block per acceptance criterion; the terminal summary prints a line per criterion."""

import itertools
import json
import random
import threading
import time
import urllib.request
from importlib import resources
from urllib.parse import urlencode

import pytest

from geolicense.algebra import (
    DESIGNATIONS,
    OUTCOMES,
    Engine,
    LicenseDesignation as D,
    LicenseMatrix,
    Mode,
    X,
    combine_all,
    combine_matrix,
    combine_or,
    decode_attributes,
    encode_attributes,
    load_matrix,
    parse_outcome,
    validate_algebra,
)
from geolicense.ccrel import CcrelError, LicenseDocument, emit_ccrel, parse_ccrel
from geolicense.config import load_config, parse_config
from geolicense.sidecar import DatasetKind, DatasetRef, read_license, write_license

from conftest import GOLDEN, shapefile_header, write_sidecar
from test_algebra import printed_matrix

NON_PD = [d for d in DESIGNATIONS if d is not D.PD]


# --------------------------------------------------------------------------
# AC1 matrix fidelity


@pytest.mark.criterion(1)
def test_ac1_csv_matches_printed_table():
    printed = printed_matrix()
    golden = load_matrix()
    assert len(printed) == 144
    for a, b in itertools.product(DESIGNATIONS, repeat=2):
        assert golden.cell(a, b).code == printed[a.code, b.code], (a.code, b.code)


@pytest.mark.criterion(1)
def test_ac1_raw_engine_matches_csv_within_a_second():
    csv_text = (resources.files("geolicense") / "data" / "license_matrix.csv").read_text()
    reference = LicenseMatrix.from_csv(csv_text)
    start = time.perf_counter()
    mismatches = [
        (a, b)
        for a, b in itertools.product(DESIGNATIONS, repeat=2)
        if combine_matrix(a, b, Mode.RAW) != reference.cell(a, b)
    ]
    elapsed = time.perf_counter() - start
    assert mismatches == []
    assert elapsed < 1.0


# --------------------------------------------------------------------------
# AC2 structural invariants


@pytest.mark.criterion(2)
@pytest.mark.parametrize("d", DESIGNATIONS, ids=lambda d: d.code)
def test_ac2_diagonal_idempotent(d):
    assert load_matrix().cell(d, d).code == d.code


@pytest.mark.criterion(2)
def test_ac2_pd_two_sided_identity():
    m = load_matrix()
    checks = [(m.cell(D.PD, d), d) for d in DESIGNATIONS] + [(m.cell(d, D.PD), d) for d in DESIGNATIONS]
    assert len(checks) == 24
    assert all(got == want for got, want in checks)


@pytest.mark.criterion(2)
def test_ac2_cc0_near_identity():
    m = load_matrix()
    assert m.cell(D.PD, D.CC0) == m.cell(D.CC0, D.PD) == D.CC0
    for d in NON_PD:
        assert m.cell(D.CC0, d) == d and m.cell(d, D.CC0) == d, d.code


@pytest.mark.criterion(2)
@pytest.mark.parametrize("closed", [D.ARR, D.NL], ids=lambda d: d.code)
def test_ac2_arr_nl_rows_and_columns(closed):
    m = load_matrix()
    for d in DESIGNATIONS:
        if d in (D.PD, D.CC0):
            assert m.cell(closed, d) is not X and m.cell(d, closed) is not X
        else:
            assert m.cell(closed, d) is X and m.cell(d, closed) is X, d.code


# --------------------------------------------------------------------------
# AC3 spot checks


@pytest.mark.criterion(3)
def test_ac3_spot_checks():
    assert combine_matrix(D.PD, D.BY_SA) == D.BY_SA
    assert combine_matrix(D.BY_NC, D.BY_ND) is X
    assert combine_or(D.BY_NC, D.BY_ND) == D.BY_NC_ND
    assert combine_matrix(D.BY, D.ARR) is X


@pytest.mark.criterion(3)
def test_ac3_or_engine_adds_flag_bits():
    nc, nd = encode_attributes(D.BY_NC), encode_attributes(D.BY_ND)
    assert (nc.bits & 0b011, nd.bits & 0b011) == (0b001, 0b010)
    joined = encode_attributes(combine_or(D.BY_NC, D.BY_ND))
    assert joined.bits & 0b011 == 0b011
    assert decode_attributes(joined) == D.BY_NC_ND


# --------------------------------------------------------------------------
# AC4 OR-engine laws


@pytest.mark.criterion(4)
def test_ac4_or_engine_laws_within_a_second():
    start = time.perf_counter()
    pairs = list(itertools.product(OUTCOMES, repeat=2))
    triples = list(itertools.product(OUTCOMES, repeat=3))
    comm = [(a, b) for a, b in pairs if combine_or(a, b) != combine_or(b, a)]
    assoc = [
        (a, b, c)
        for a, b, c in triples
        if combine_or(combine_or(a, b), c) != combine_or(a, combine_or(b, c))
    ]
    elapsed = time.perf_counter() - start
    assert (len(pairs), len(triples)) == (169, 2197)
    assert comm == [] and assoc == []
    assert elapsed < 1.0


# --------------------------------------------------------------------------
# AC5 audit determinism


@pytest.mark.criterion(5)
def test_ac5_raw_report_is_stable_and_matches_golden():
    renders = [validate_algebra(Engine.MATRIX, Mode.RAW).render() for _ in range(3)]
    assert renders[0]
    assert renders[0] == renders[1] == renders[2]
    assert renders[0] == (GOLDEN / "validate_matrix_raw.txt").read_text()


@pytest.mark.criterion(5)
def test_ac5_symmetry_violations_recheck_against_printed_table():
    printed = printed_matrix()
    report = validate_algebra(Engine.MATRIX, Mode.RAW)
    flagged = {frozenset((a.code, b.code)) for a, b, _, _ in report.symmetry_violations}
    expected = {
        frozenset((a, b))
        for (a, b), v in printed.items()
        if a < b and v != printed[b, a]
    }
    assert flagged == expected
    assert flagged == {
        frozenset(("BY-NC-ND", "BY-NC-SA")),
        frozenset(("BY-NC-ND", "BY-ND-SA")),
        frozenset(("BY-NC-ND", "BY-ND")),
    }
    for a, b, fwd, rev in report.symmetry_violations:
        assert (fwd.code, rev.code) == (printed[a.code, b.code], printed[b.code, a.code])


# --------------------------------------------------------------------------
# AC6 fold direction


def left_fold(licenses, mode=Mode.RAW):
    acc = licenses[0]
    for d in licenses[1:]:
        if acc is X:
            return X
        acc = combine_matrix(acc, d, mode)
    return acc


@pytest.mark.criterion(6)
def test_ac6_right_fold_versus_left_fold():
    inputs = [D.BY_NC, D.BY_ND, D.BY_NC_ND]
    assert combine_all(inputs, Engine.MATRIX, Mode.RAW) == D.BY_NC_ND
    assert left_fold(inputs) is X


# --------------------------------------------------------------------------
# AC7 codec


def _documents():
    optional = ("work_uri", "title", "attribution_name", "attribution_url")
    values = {
        "work_uri": "http://example.org/data/roads",
        "title": "Roads & <Rails>",
        "attribution_name": 'County "GIS"',
        "attribution_url": "http://example.org/gis?a=1&b=2",
    }
    for d in DESIGNATIONS:
        for mask in range(16):
            fields = {k: values[k] for i, k in enumerate(optional) if mask >> i & 1}
            yield LicenseDocument(d, **fields)


@pytest.mark.criterion(7)
def test_ac7_round_trip():
    docs = list(_documents())
    assert len(docs) >= 96
    for doc in docs:
        back = parse_ccrel(emit_ccrel(doc))
        assert (back.designation, back.license_uri, back.work_uri, back.title) == (
            doc.designation, doc.license_uri, doc.work_uri, doc.title
        )
        if doc.designation.is_cc_license:
            assert (back.attribution_name, back.attribution_url) == (
                doc.attribution_name, doc.attribution_url
            )


@pytest.mark.criterion(7)
def test_ac7_golden_fragments_byte_exact():
    for d in DESIGNATIONS:
        golden = (GOLDEN / "fragments" / f"{d.code}.xhtml").read_bytes()
        assert emit_ccrel(LicenseDocument(d, title=d.code.lower())).encode("utf-8") == golden, d.code


@pytest.mark.criterion(7)
def test_ac7_parser_fuzz():
    rng = random.Random(20260101)
    seeds = [emit_ccrel(LicenseDocument(d, title="t")).encode() for d in DESIGNATIONS]
    for i in range(100_000):
        if i % 2:
            data = rng.randbytes(rng.randrange(0, 64))
        else:
            base = bytearray(rng.choice(seeds))
            for _ in range(rng.randrange(1, 4)):
                pos = rng.randrange(len(base))
                base[pos:pos + rng.randrange(0, 8)] = rng.randbytes(rng.randrange(0, 4))
            data = bytes(base)
        try:
            parse_ccrel(data)
        except CcrelError:
            pass


# --------------------------------------------------------------------------
# AC8 sidecar


@pytest.mark.criterion(8)
def test_ac8_round_trip_all_designations(tmp_path):
    for d in DESIGNATIONS:
        ref = DatasetRef(tmp_path / d.code, DatasetKind.SHAPEFILE)
        write_license(ref, LicenseDocument(d, title=d.code))
        back = read_license(ref)
        assert (back.designation, back.title) == (d, d.code)


@pytest.mark.criterion(8)
def test_ac8_missing_sidecar_is_nl(tmp_path):
    assert read_license(DatasetRef(tmp_path / "restaurants")).designation is D.NL


@pytest.mark.criterion(8)
def test_ac8_reader_never_sees_partial_file(tmp_path):
    ref = DatasetRef(tmp_path / "roads")
    docs = [
        LicenseDocument(d, title="x" * (4000 * (i % 3 + 1)), attribution_name="n" * 2000 if d.is_cc_license else None)
        for i, d in enumerate(DESIGNATIONS)
    ]
    complete = {emit_ccrel(doc).encode("utf-8") for doc in docs}
    write_license(ref, docs[0])
    stop = threading.Event()
    observed, torn = [], []

    def reader():
        while not stop.is_set():
            data = ref.sidecar_path.read_bytes()
            observed.append(data)
            if data not in complete:
                torn.append(data)

    t = threading.Thread(target=reader)
    t.start()
    try:
        for i in range(400):
            write_license(ref, docs[i % len(docs)], overwrite=True)
    finally:
        stop.set()
        t.join()
    assert observed
    assert torn == []
    assert sorted(p.name for p in tmp_path.iterdir()) == ["roads.lic"]


# --------------------------------------------------------------------------
# AC9 end-to-end scenario


def _get(base, **params):
    url = f"{base}/wls?{urlencode(params)}"
    with urllib.request.urlopen(url, timeout=10) as resp:
        return resp.status, resp.headers["Content-Type"], resp.read()


@pytest.mark.criterion(9)
def test_ac9_mashup_over_http(scenario_dir, live_server):
    server = live_server(load_config(scenario_dir / "wls.cfg"))
    layers = "roads,restaurants,neighborhoods"
    status, ctype, body = _get(server.base, SERVICE="WLS", REQUEST="GetLicense", LAYERS=layers,
                               FORMAT="application/json")
    assert (status, ctype) == (200, "application/json")
    payload = json.loads(body)
    assert payload["designation"] == "BY-NC" and payload["compatible"] is True

    status, ctype, body = _get(server.base, SERVICE="WLS", REQUEST="GetLicense", LAYERS=layers,
                               FORMAT="application/xhtml+xml")
    assert (status, ctype) == (200, "application/xhtml+xml")
    assert parse_ccrel(body).designation is D.BY_NC


@pytest.mark.criterion(9)
def test_ac9_layer_without_sidecar_is_incompatible(scenario_dir, live_server):
    (scenario_dir / "parks.shp").write_bytes(shapefile_header())
    text = (scenario_dir / "wls.cfg").read_text() + "[layer parks]\nshapefile = parks\n"
    server = live_server(parse_config(text, base_dir=scenario_dir))
    status, _, body = _get(server.base, SERVICE="WLS", REQUEST="GetLicense",
                           LAYERS="roads,restaurants,neighborhoods,parks", FORMAT="application/json")
    payload = json.loads(body)
    assert status == 200
    assert payload["compatible"] is False
    assert payload["designation"] == "X"


# --------------------------------------------------------------------------
# AC10 service / algebra equivalence


@pytest.mark.criterion(10)
def test_ac10_service_matches_combine_all(tmp_path, live_server):
    rng = random.Random(10)
    names = []
    lines = []
    for i, d in enumerate(DESIGNATIONS * 2):
        name = f"l{i}_{d.code.lower().replace('-', '')}"
        write_sidecar(tmp_path / name, d, title=name)
        names.append((name, d))
        lines.append(f"[layer {name}]\nshapefile = {name}\n")
    names.append(("bare", D.NL))
    lines.append("[layer bare]\nshapefile = bare\n")
    server = live_server(parse_config("\n".join(lines), base_dir=tmp_path))

    mismatches = []
    for _ in range(500):
        picked = rng.sample(names, rng.randrange(1, 7))
        engine = rng.choice(list(Engine))
        mode = rng.choice(list(Mode))
        _, _, body = _get(server.base, SERVICE="WLS", REQUEST="GetLicense",
                          LAYERS=",".join(n for n, _ in picked), FORMAT="application/json",
                          ENGINE=engine.value, MODE=mode.value)
        got = parse_outcome(json.loads(body)["designation"])
        want = combine_all([d for _, d in picked], engine, mode)
        if got != want:
            mismatches.append((picked, engine, mode, got, want))
    assert mismatches == []
