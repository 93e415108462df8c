"""Smoke test for the reqap extension module. Run after building it."""

import datetime as dt
import sys
import tempfile
from pathlib import Path

import reqap


def store():
    records = [
        {"id": "f1", "source": "workout", "start": dt.datetime(2024, 10, 1, 9), "end": dt.datetime(2024, 10, 1, 10, 30), "text": "I played football"},
        {"id": "f2", "source": "workout", "start": dt.datetime(2024, 10, 3, 17), "end": dt.datetime(2024, 10, 3, 18, 30), "text": "I played football"},
        {"id": "m1", "source": "calendar", "start": dt.datetime(2024, 10, 1, 13), "title": "Lunch at Luigi's", "cuisine": "Italian", "text": "I ate food"},
        {"id": "m2", "source": "calendar", "start": dt.datetime(2024, 10, 3, 20), "title": "Dinner at Napoli", "cuisine": "Italian", "text": "I ate food"},
        {"id": "m3", "source": "calendar", "start": dt.datetime(2024, 10, 4, 20), "title": "Tacos", "cuisine": "Mexican", "text": "I ate food"},
        {"id": "w1", "source": "note", "start": dt.date(2024, 10, 5), "duration": dt.timedelta(minutes=45), "tags": ["a", "b"]},
    ]
    return reqap.EventStore.from_records(records)


def main():
    s = store()
    assert len(s) == 6
    e = s.get("m1")
    assert e.source == "calendar" and e.start == dt.datetime(2024, 10, 1, 13)
    assert e.attrs["cuisine"] == "Italian"
    assert e.get("start_date") == dt.date(2024, 10, 1)
    w = s.get("w1")
    assert w.attrs["duration"] == dt.timedelta(minutes=45)
    assert w.attrs["tags"] == ["a", "b"]
    again = reqap.EventStore.from_jsonl(s.dump())
    assert [x.to_json() for x in again.events()] == [x.to_json() for x in s.events()]

    assert reqap.parse_plan('RETRIEVE( query = "I ate food" )') == 'RETRIEVE(query="I ate food")'
    diags = reqap.validate_plan('FILTER(l=RETRIEVE(query="x"), filter=lambda attr: attr["price"] > 3)')
    assert any(d["level"] == "error" for d in diags), diags
    try:
        reqap.parse_plan("RETRIEVE(")
    except reqap.ReqapError:
        pass
    else:
        raise AssertionError("bad plan parsed")

    oracle = {"I played football": ["f1", "f2"], "I ate food": ["m1", "m2", "m3"]}
    script = {
        "how many italian meals did I have after football?": 'APPLY(l=QUD("I ate Italian food after playing football"), fct=len)',
        "I ate Italian food after playing football": 'JOIN(l1=QUD("football with datetimes"), l2=QUD("italian meals with datetime"), condition="i1.start_date == i2.start_date and i1.end_datetime <= i2.start_datetime")',
        "football with datetimes": 'EXTRACT(l=RETRIEVE(query="I played football"), attr_names=["start_datetime", "end_datetime"], attr_types=[datetime.fromtimestamp, datetime.fromtimestamp])',
        "italian meals with datetime": 'EXTRACT(l=FILTER(l=EXTRACT(l=RETRIEVE(query="I ate food"), attr_names=["cuisine"], attr_types=[str]), filter=lambda attr: attr["cuisine"] == "Italian"), attr_names=["start_datetime"], attr_types=[datetime.fromtimestamp])',
    }
    engine = reqap.Engine(s, classifier="oracle", oracle=oracle, script=script, clock=dt.datetime(2024, 10, 31))
    ans = engine.ask("how many italian meals did I have after football?")
    assert ans.kind == "scalar" and ans.value == 2, ans
    assert set(ans.provenance) >= {"m1", "m2"}, ans.provenance
    assert ans.trace[-1]["operator"] == "APPLY"
    assert ans.plan.startswith("APPLY(")
    meals = engine.execute('RETRIEVE(query="I ate food")')
    assert [m.id for m in meals.value] == ["m1", "m2", "m3"]
    lexical = reqap.Engine(s)
    assert lexical.clock == dt.datetime(2024, 10, 5)
    assert {x.id for x in lexical.retrieve("I played football")} >= {"f1", "f2"}

    assert reqap.hit_at_1(3, 3.0)
    assert not reqap.hit_at_1("Rome", "Paris")
    assert reqap.rlx_hit_at_1(105, 100) and not reqap.hit_at_1(105, 100)
    assert abs(reqap.mcnemar(3, 3) - 1.0) < 1e-12
    try:
        reqap.mcnemar(0, 0)
    except reqap.ReqapError:
        pass
    else:
        raise AssertionError("no discordant pairs should be an error")
    assert reqap.mcnemar(0, 10) < 0.01
    assert len(reqap.deduplicate(s.events())) <= len(s)

    with tempfile.TemporaryDirectory() as tmp:
        ids = reqap.generate_dataset(tmp, seed=3, personas=1, scale=0.1, questions=5)
        assert len(ids) == 1
        persona = Path(tmp) / ids[0]
        assert persona.is_dir(), sorted(p.name for p in Path(tmp).iterdir())
        events = next(persona.glob("*.jsonl"))
        assert len(reqap.EventStore.load(str(events))) > 0

    print("python smoke test ok")


if __name__ == "__main__":
    sys.exit(main())
