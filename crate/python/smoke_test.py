"""Smoke test for the compiled extension.

Build and install first:  pip install --no-build-isolation ./crates/py
Then run:                 python python/smoke_test.py
"""

import os
import tempfile

import mindstream

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(HERE, "..", "crates", "core", "tests", "fixtures")


def read(name):
    with open(os.path.join(FIXTURES, name), encoding="utf-8") as f:
        return f.read()


def check_functions():
    assert abs(mindstream.f1(20, [5, 15, 17]) - 0.15628) < 1e-5
    assert mindstream.f2(20, [5, 15, 17]) == 0.669921875
    assert mindstream.f3(20, [5, 15, 17]) == 0.125
    assert mindstream.f1(32, [32]) == 1.0
    assert mindstream.a_hat(2) == 0.75
    assert mindstream.display_value(0.5625) == "0.563"
    assert mindstream.display_value(1e-4) == "0.0"


def check_annotated():
    s = mindstream.Session()
    s.step(read("listing_t1_t9.txt"))
    assert s.actors() == ["Wolf", "Jäger", "Frau", "Bett"]
    assert s.position == 9
    snap = s.snapshot("Jäger", fn="f3", c=9)
    assert snap["entries"][0]["key"] == "Jäger|suchen|Wolf"
    assert snap["entries"][0]["priority"] == 1.0

    try:
        s.snapshot("Niemand")
    except KeyError:
        pass
    else:
        raise AssertionError("unknown actor accepted")

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "session.json")
        s.save(path)
        back = mindstream.Session.load(path)
        assert back.event_log() == s.event_log()
        assert back.snapshot("Wolf", fn="f2") == s.snapshot("Wolf", fn="f2")


def check_raw():
    s = mindstream.Session(mode="raw", lexicon=os.path.join(FIXTURES, "passage.lex"))
    s.step("Der Jäger ging vorbei.")
    delta = s.step("Er trat ein.")
    assert delta["emitted"] == []
    [request] = s.pending()
    assert request["candidates"] == ["Jäger"]
    out = s.resolve(request["request_id"], actor="Jäger", object="Haus")
    assert out["emitted"] == ["Jäger|eintreten|Haus|2"]

    s.step("Wer bist du?")
    assert s.dropped()[0]["reason"] == "INTERROGATIVE"


if __name__ == "__main__":
    check_functions()
    check_annotated()
    check_raw()
    print("smoke test passed")
