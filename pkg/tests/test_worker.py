import io

import pytest

from cli.gns_commands import CommandOptions, evaluate_row, scan_tasks
from cli.gns_config import parse_config, resolve_engine
from cli.gns_records import parse_records
from worker import read_checkpoint, run_scan, scan_config, write_checkpoint

QUADRATIC_SCAN = """
[order]
min_poly = [-1, 1]

[domain]
family = "box"
offsets = [0]

[scan]
ranges = [[[2, 4]], [[-2, 4]]]
command = "decide"
"""


def tasks_for(text):
    config = parse_config(text)
    return list(scan_tasks(config, resolve_engine(config.engine), "records"))


def test_checkpoint_round_trip(tmp_path):
    path = str(tmp_path / "scan.ckpt")
    assert read_checkpoint(path) == 0
    assert read_checkpoint(None) == 0
    write_checkpoint(path, 6)
    assert open(path).read() == "6\n"
    assert read_checkpoint(path) == 7


async def test_serial_and_parallel_output_match():
    tasks = tasks_for(QUADRATIC_SCAN)
    serial, parallel = io.StringIO(), io.StringIO()
    assert await run_scan(tasks, evaluate_row, 1, serial) == len(tasks)
    assert await run_scan(tasks, evaluate_row, 2, parallel) == len(tasks)
    assert serial.getvalue() == parallel.getvalue()
    rows = parse_records(serial.getvalue())
    assert [r["row"] for r in rows] == list(range(len(tasks)))


async def test_scan_matches_classical_region():
    rows = parse_records(await _scan_text(QUADRATIC_SCAN))
    for row in rows:
        c, b = (int(x) for x in row["instance"].split(";")[1][len("p=[["):].split("],[")[:2])
        assert (row["verdict"] == "FinitenessHolds") == (-1 <= b <= c), row["instance"]


async def _scan_text(text, **options):
    out = io.StringIO()
    await scan_config(parse_config(text), CommandOptions(format="records", out=out, **options))
    return out.getvalue()


async def test_resume_from_checkpoint(tmp_path):
    output = tmp_path / "rows.txt"
    checkpoint = tmp_path / "rows.ckpt"
    text = QUADRATIC_SCAN + f'output = "{output}"\ncheckpoint = "{checkpoint}"\n'
    await _scan_text(text)
    full = output.read_text()

    lines = full.splitlines(keepends=True)
    output.write_text("".join(lines[:5]))
    write_checkpoint(str(checkpoint), 4)
    await _scan_text(text)
    assert output.read_text() == full
    assert read_checkpoint(str(checkpoint)) == len(lines)


async def test_empty_scan_writes_nothing(tmp_path):
    output = tmp_path / "rows.txt"
    text = QUADRATIC_SCAN + f'domains = []\noutput = "{output}"\n'
    assert await _scan_text(text) == ""
    assert output.read_text() == ""


async def test_dominant_scan_rows():
    text = QUADRATIC_SCAN.replace('command = "decide"', 'command = "dominant"')
    rows = parse_records(await _scan_text(text, workers=2))
    assert len(rows) == 21
    assert all(isinstance(r["passed"], bool) for r in rows)


@pytest.mark.slow
async def test_wide_quadratic_scan(tmp_path):
    text = QUADRATIC_SCAN.replace("ranges = [[[2, 4]], [[-2, 4]]]", "ranges = [[[2, 9]], [[-11, 11]]]")
    rows = parse_records(await _scan_text(text, workers=2))
    accepted = {r["instance"] for r in rows if r["verdict"] == "FinitenessHolds"}
    expected = {f"f=[-1,1];p=[[{c}],[{b}],[1]];F=box[0]" for c in range(2, 10) for b in range(-1, c + 1)}
    assert accepted == expected


async def test_dominant_scan_accepts_a_subset_of_decide():
    decided = parse_records(await _scan_text(QUADRATIC_SCAN))
    dominant = parse_records(await _scan_text(QUADRATIC_SCAN.replace('command = "decide"', 'command = "dominant"')))
    holds = {r["instance"] for r in decided if r["verdict"] == "FinitenessHolds"}
    passed = {r["instance"] for r in dominant if r["passed"]}
    assert passed
    assert passed <= holds
