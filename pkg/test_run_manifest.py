import json

import pytest

from errors import InvalidSpecError
from run_manifest import VERSION, RunManifest, load_manifest, manifest_path, save_manifest


def test_roundtrip_and_no_leftover(tmp_path):
    path = manifest_path(tmp_path / 'out.csv')
    assert path.name == 'out.csv.manifest.json'
    saved = RunManifest(command='gen', args={'dim': 10, 'density': [0.5]}, outputs=['out.csv'])
    save_manifest(saved, path)
    assert load_manifest(path) == saved
    assert [p.name for p in tmp_path.iterdir()] == [path.name]


def test_missing_and_corrupt(tmp_path):
    with pytest.raises(InvalidSpecError):
        load_manifest(tmp_path / 'absent.json')
    bad = tmp_path / 'bad.json'
    bad.write_text('{"command": ')
    with pytest.raises(InvalidSpecError):
        load_manifest(bad)
    bad.write_text(json.dumps({'command': 'gen'}))
    with pytest.raises(InvalidSpecError):
        load_manifest(bad)


def test_version_mismatch_warns(tmp_path, caplog):
    path = tmp_path / 'old.json'
    path.write_text(json.dumps({'command': 'gen', 'args': {}, 'version': '0.1.0'}))
    manifest = load_manifest(path)
    assert manifest.version == '0.1.0' and manifest.version != VERSION
    assert any('0.1.0' in r.getMessage() for r in caplog.records)
