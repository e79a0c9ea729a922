#!/usr/bin/env python3
"""
bwcheck CLI Tests
=================
Exit codes, JSON reports on stdout and the per-subset log file.

Usage:
    pytest test_bwcheck.py
    BW_RUN_SLOW=1 pytest test_bwcheck.py -k full
"""

import os
import json
import math

import pytest

import bwcheck
from deformation_lab import project_sides
from polygon_geometry import ConvexPolygon, regular_polygon, regular_triangle
from reports import write_polygon

SLOW = os.getenv('BW_RUN_SLOW') == '1'


@pytest.fixture
def polygon_file(tmp_path):
    def _write(P, name='poly.json'):
        path = tmp_path / name
        write_polygon(P, str(path))
        return str(path)
    return _write


def _run(capsys, argv):
    code = bwcheck.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_mixed_area_all_methods_agree(capsys, polygon_file):
    square = polygon_file(ConvexPolygon([(0, 0), (1, 0), (1, 1), (0, 1)]), 'square.json')
    code, out, err = _run(capsys, ['mixed-area', square, square, '--method', 'all'])
    assert code == 0
    data = json.loads(out)
    assert data['command'] == 'mixed-area'
    assert data['minkowski'] == pytest.approx(1.0)
    assert data['max_disc'] <= 1e-9
    assert '📊' in err


def test_malformed_input_exits_2(capsys, tmp_path):
    bad = tmp_path / 'bad.json'
    bad.write_text('{"vertices": [[0, 0], [1, 0]')
    code, out, err = _run(capsys, ['deficit', str(bad)])
    assert code == 2
    assert out == ''
    assert '❌' in err
    code, _, _ = _run(capsys, ['deficit', str(tmp_path / 'missing.json')])
    assert code == 2


def test_nonconvex_input_exits_2(capsys, tmp_path):
    path = tmp_path / 'dent.json'
    path.write_text(json.dumps({'vertices': [[0, 0], [2, 0], [1, 0.2], [2, 2], [0, 2]]}))
    code, _, _ = _run(capsys, ['hexagons', str(path)])
    assert code == 2


def test_deficit_of_regular_triangle(capsys, polygon_file):
    code, out, _ = _run(capsys, ['deficit', polygon_file(regular_triangle(2.0))])
    assert code == 0
    data = json.loads(out)
    assert abs(data['deficit']) <= 1e-9
    assert abs(data['eps']) <= 1e-12


def test_hexagons_and_dtr(capsys, polygon_file):
    K = polygon_file(regular_polygon(6, 6.0))
    code, out, _ = _run(capsys, ['hexagons', K])
    assert code == 0
    chain = json.loads(out)['chain']
    assert chain['deficit_K'] >= chain['deficit_H0_H2'] - 1e-9
    code, out, _ = _run(capsys, ['dtr', K])
    assert code == 0
    data = json.loads(out)
    assert data['approximate'] is True
    assert 0 < data['d_tr'] < 1


def test_deform_lowers_ratio(capsys, polygon_file):
    P = project_sides((1.0, 1.0, 1.0, 1.05, 0.95)).to_polygon()
    code, out, err = _run(capsys, ['deform', polygon_file(P)])
    assert code == 0
    move = json.loads(out)['move']
    assert move['ratio_after'] < move['ratio_before']
    assert '✅' in err


def test_deform_regular_pentagon_reports_stats(capsys, polygon_file):
    code, out, _ = _run(capsys, ['deform', polygon_file(regular_polygon(5, 5.0))])
    assert code == 0
    data = json.loads(out)
    assert data['move'] is None
    assert data['regular_stats']['ratio'] == pytest.approx(20 * math.sin(math.pi / 5), rel=1e-9)


def test_verify_budget_exhausted_exits_3(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv('BW_LOG_DIR', str(tmp_path / 'logs'))
    code, out, err = _run(capsys, ['verify-lemma', '--ineq', 'quadratic', '--max-subsets', '10'])
    assert code == 3
    data = json.loads(out)
    assert data['status'] == 'BUDGET_EXCEEDED'
    assert 'wall_time' not in data
    assert data['checks']['basis_containment']['ok']
    log = tmp_path / 'logs' / 'verify-quadratic.log'
    assert log.exists()


def test_bad_budget_exits_2(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv('BW_LOG_DIR', str(tmp_path / 'logs'))
    code, _, _ = _run(capsys, ['verify-lemma', '--max-subsets', '0'])
    assert code == 2


def test_stability_scan_small(capsys, tmp_path):
    out_path = tmp_path / 'scan.json'
    code, out, _ = _run(capsys, ['--out', str(out_path), 'stability-scan', '--samples', '5'])
    assert code == 0
    data = json.loads(out)
    assert data['summary']['violations'] == 0
    assert len(data['rows']) == 5
    assert out_path.read_text() == out
    code, _, _ = _run(capsys, ['stability-scan', '--samples', '0'])
    assert code == 2


def test_reports_are_byte_identical(capsys, polygon_file):
    K = polygon_file(regular_polygon(7, 3.0, rotation=0.4))
    first = _run(capsys, ['--seed', '7', 'hexagons', K])[1]
    second = _run(capsys, ['--seed', '7', 'hexagons', K])[1]
    assert first == second
    first = _run(capsys, ['--seed', '7', 'stability-scan', '--samples', '2'])[1]
    second = _run(capsys, ['--seed', '7', 'stability-scan', '--samples', '2'])[1]
    assert first == second


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as info:
        bwcheck.main(['mixed-area', 'a.json', 'b.json', '--method', 'simpson'])
    assert info.value.code == 2


@pytest.mark.skipif(not SLOW, reason='set BW_RUN_SLOW=1 for the full-domain certification')
def test_full_verify_lemma(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv('BW_LOG_DIR', str(tmp_path / 'logs'))
    code, out, _ = _run(capsys, ['verify-lemma', '--ineq', 'norm', '--workers', str(os.cpu_count() or 1)])
    assert code == 0
    assert json.loads(out)['status'] == 'VERIFIED'
