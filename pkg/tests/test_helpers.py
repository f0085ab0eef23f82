import pytest

from utils.helpers import (csv_writer, display_progress_bar, format_float, format_table_data, text_writer,
                           write_files)


def test_format_float_is_lossless():
    value = 0.1 + 0.2
    assert float(format_float(value)) == value
    assert format_float(1) == '1.0000000000000000e+00'


def test_table_keeps_every_digit():
    lines = format_table_data(['h', 'e_h', 'eoc'], [['0.1', '1.9360e-02', '-'], ['0.05', '4.8400e-03', '2.00']])
    assert len(lines) == 4
    assert lines[0].split() == ['h', 'e_h', 'eoc']
    assert set(lines[1].replace(' ', '')) == {'-'}
    assert lines[3].split() == ['0.05', '4.8400e-03', '2.00']
    assert len({len(line) for line in lines}) == 1


def test_table_without_rows():
    assert format_table_data(['h'], []) == ['(no levels)']


@pytest.mark.parametrize("t, final_time, filled", [
    (0.0, 10.0, 0),
    (5.0, 10.0, 10),
    (10.0, 10.0, 20),
    (12.0, 10.0, 20),
    (0.0, 0.0, 20),
])
def test_progress_bar_tracks_simulated_time(t, final_time, filled):
    bar = display_progress_bar(t, final_time, width=20, label='midpoint')
    assert bar.startswith('midpoint [')
    assert bar.count('#') == filled
    assert bar.count('.') >= 20 - filled


def test_csv_written_atomically(tmp_path):
    target = tmp_path / 'nested' / 'fluxes.csv'
    ok, errors = write_files([(str(target), csv_writer([{'t': '0', 'flux': '1'}], ['t', 'flux']))])
    assert ok and errors == []
    assert target.read_text() == 't,flux\n0,1\n'
    assert [p.name for p in target.parent.iterdir()] == ['fluxes.csv']


def test_text_overwrites_previous_file(tmp_path):
    target = tmp_path / 'report.txt'
    assert write_files([(str(target), text_writer('old\n'))])[0]
    assert write_files([(str(target), text_writer('new\n'))]) == (True, [])
    assert target.read_text() == 'new\n'


def test_files_are_written_all_or_nothing(tmp_path):
    first, second = tmp_path / 'boundary_flux.csv', tmp_path / 'snapshots.csv'

    def broken(f):
        f.write('t,edge\n')
        raise OSError("disk full")

    ok, errors = write_files([(str(first), csv_writer([{'t': '0'}], ['t'])), (str(second), broken)])
    assert not ok and 'snapshots.csv' in errors[0]
    assert list(tmp_path.iterdir()) == []


def test_pair_replaces_both_targets(tmp_path):
    first, second = tmp_path / 'a.txt', tmp_path / 'b.txt'
    first.write_text('stale\n')
    assert write_files([(str(first), text_writer('one\n')), (str(second), text_writer('two\n'))]) == (True, [])
    assert (first.read_text(), second.read_text()) == ('one\n', 'two\n')
    assert sorted(p.name for p in tmp_path.iterdir()) == ['a.txt', 'b.txt']


def test_failed_rename_restores_earlier_targets(tmp_path):
    first, blocked = tmp_path / 'boundary_flux.csv', tmp_path / 'snapshots.csv'
    first.write_text('stale\n')
    blocked.mkdir()
    ok, _ = write_files([(str(first), text_writer('fresh\n')), (str(blocked), text_writer('rows\n'))])
    assert not ok
    assert first.read_text() == 'stale\n'
    assert sorted(p.name for p in tmp_path.iterdir()) == ['boundary_flux.csv', 'snapshots.csv']
