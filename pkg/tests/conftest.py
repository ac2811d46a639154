import json
from importlib import resources

import pytest

from reflectsum.corpus import load_corpus


def toy_corpus_paths():
    data = resources.files("reflectsum.data").joinpath("toy")
    return data.joinpath("responses.jsonl"), data.joinpath("annotations.jsonl")


def write_corpus(tmp_path, responses, annotations):
    resp = tmp_path / "responses.jsonl"
    ann = tmp_path / "annotations.jsonl"
    resp.write_text("".join(json.dumps(r) + "\n" for r in responses))
    ann.write_text("".join(json.dumps(a) + "\n" for a in annotations))
    return resp, ann


@pytest.fixture
def toy_corpus():
    return load_corpus(*toy_corpus_paths())
