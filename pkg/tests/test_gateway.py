import pytest

from homedrift import codec, gateway as gw
from homedrift.model import (
    BinaryState,
    DeviceKind,
    LocationFix,
    ScalarReading,
    SensorEvent,
)
from homedrift.simulate import Fault, FaultSpec, fault_windows, simulate
from conftest import START, make_home

KEY = bytes(range(16))


def _gateway(sim, **kw):
    return gw.Gateway(
        sim.home,
        pseudonym="a" * 32,
        location_key=KEY,
        location_consent=sim.subject.location_consent,
        **kw,
    )


def _fill_day(g, sim, result, day_index=0):
    events = result.traces[sim.home.home_id][day_index].to_events()
    for e in events:
        g.ingest_local(e)
    return events


def test_ingest_initializes_liveness(sim_month):
    sim, result = sim_month
    g = _gateway(sim)
    _fill_day(g, sim, result)
    for dev in sim.home.devices:
        # every device that reported is tracked
        if dev.device_id in {e.device_id for e in result.traces["home-001"][0].to_events()}:
            assert dev.device_id in g.last_seen


def test_stale_and_unknown_device_rejected(sim_month):
    sim, result = sim_month
    g = _gateway(sim)
    events = _fill_day(g, sim, result)
    with pytest.raises(gw.StaleTimestamp):
        g.ingest_local(events[-1])
    stranger = SensorEvent("dev-f00d", "home-001", events[-1].timestamp + 1,
                           DeviceKind.MOTION_PIR, BinaryState("on"))
    with pytest.raises(gw.UnknownDevice):
        g.ingest_local(stranger)


def test_location_rejected_without_consent(sim_month):
    sim, _ = sim_month
    g = gw.Gateway(sim.home, "b" * 32, location_key=KEY, location_consent=False)
    fix = SensorEvent(sim.roles["gps"], "home-001", 1.0, DeviceKind.LOCATION_SOURCE,
                      LocationFix(45.0, 9.0, 10.0))
    with pytest.raises(gw.ConsentViolation):
        g.ingest_local(fix)


def test_periodic_silence_alert_after_double_interval(sim_month):
    sim, _ = sim_month
    g = _gateway(sim)
    stove = sim.roles["stove-temp"]  # 300 s interval
    t0 = 1_767_222_000.0
    g.ingest_local(SensorEvent(stove, "home-001", t0, DeviceKind.TEMPERATURE, ScalarReading(21.0, "C")))
    assert g.liveness_check(t0 + 500) == []
    alerts = g.liveness_check(t0 + 700)
    assert [a.device_id for a in alerts] == [stove]
    # still silent: no duplicate
    assert g.liveness_check(t0 + 900) == []
    # reports again -> alert closes -> a later silence re-alerts
    g.ingest_local(SensorEvent(stove, "home-001", t0 + 1000, DeviceKind.TEMPERATURE, ScalarReading(21.0, "C")))
    assert [a.device_id for a in g.liveness_check(t0 + 1800)] == [stove]


def test_missing_report_fault_free_day(sim_month):
    sim, result = sim_month
    g = _gateway(sim)
    _fill_day(g, sim, result, day_index=1)
    trace = result.traces["home-001"][1]
    report = g.daily_missing_report(trace.date, now=trace.day_start_utc + 90000)
    by_dev = {d.device_id: d for d in report.devices}
    stove = by_dev[sim.roles["stove-temp"]]
    assert stove.expected == 288 and stove.observed == 288
    assert stove.missing_intervals == []
    watch = by_dev[sim.roles["watch"]]
    assert watch.expected == 288 and watch.observed == 288
    # event-driven silence is legal: no expectation, no gaps
    fridge = by_dev[sim.roles["fridge"]]
    assert fridge.expected is None and fridge.missing_intervals == []


def test_missing_report_recovers_dropout_interval():
    faults = FaultSpec((
        Fault("device-dropout", 1, 1, device_role="stove-temp", start_min=360, end_min=720),
    ))
    sim = make_home(seed=19, faults=faults)
    result = simulate([sim], START, 3, seed=19, keep_traces=True)
    g = _gateway(sim)
    _fill_day(g, sim, result, day_index=1)
    trace = result.traces["home-001"][1]
    report = g.daily_missing_report(trace.date, now=trace.day_start_utc + 90000)
    stove = {d.device_id: d for d in report.devices}[sim.roles["stove-temp"]]
    assert len(stove.missing_intervals) == 1
    s, e, missed = stove.missing_intervals[0]
    day0 = trace.day_start_utc
    assert abs((s - day0) - 6 * 3600) <= 300
    assert abs((e - day0) - 12 * 3600) <= 300
    # conservation: expected = observed + missed, exactly
    assert stove.expected == stove.observed + stove.missed
    for dev in report.devices:
        if dev.expected is not None:
            assert dev.expected == dev.observed + dev.missed


def test_report_on_unfinished_day_is_future_date(sim_month):
    sim, result = sim_month
    g = _gateway(sim)
    _fill_day(g, sim, result)
    trace = result.traces["home-001"][0]
    with pytest.raises(gw.FutureDate):
        g.daily_missing_report(trace.date, now=trace.day_start_utc + 1000)


def test_batch_without_location_has_no_blob(sim_month):
    sim, result = sim_month
    g = _gateway(sim)
    # build from a day with no outing (pick one)
    for i, trace in enumerate(result.traces["home-001"]):
        if not trace.truth.outings:
            _fill_day(g, sim, result, day_index=i)
            batch = g.build_sync_batch(trace.date)
            assert batch.blob is None
            assert gw.SyncBatch.parse(batch.serialize()).blob is None
            return
    pytest.fail("no outing-free day in the month")


def test_location_fixes_sealed_and_round_trip(sim_month):
    sim, result = sim_month
    g = _gateway(sim)
    for i, trace in enumerate(result.traces["home-001"]):
        fixes = trace.count_of_kind(DeviceKind.LOCATION_SOURCE)
        if fixes == 0:
            continue
        events = _fill_day(g, sim, result, day_index=i)
        batch = g.build_sync_batch(trace.date)
        # no location lines in the batch event list
        assert all("\tlocation-source\t" not in line for line in batch.event_lines)
        assert len(batch.event_lines) == len(events) - fixes
        opened = gw.open_location_blob(batch.blob, KEY, batch.batch_id)
        raw = [e for e in events if e.kind is DeviceKind.LOCATION_SOURCE]
        assert len(opened) == fixes
        assert [(e.timestamp, e.payload) for e in opened] == [
            (e.timestamp, e.payload) for e in raw
        ]
        # wrong key fails authentication
        with pytest.raises(Exception):
            gw.open_location_blob(batch.blob, bytes(16), batch.batch_id)
        return
    pytest.fail("no location fixes in the month")


def test_serialized_batch_contains_no_identity(sim_month):
    sim, result = sim_month
    g = _gateway(sim)
    _fill_day(g, sim, result, day_index=2)
    date = result.traces["home-001"][2].date
    text = g.build_sync_batch(date).serialize()
    assert "home-001" not in text
    assert "subj-001" not in text
    assert "a" * 32 in text  # pseudonym present instead


def test_batch_events_sorted_by_device_then_time(sim_month):
    sim, result = sim_month
    g = _gateway(sim)
    _fill_day(g, sim, result, day_index=2)
    batch = g.build_sync_batch(result.traces["home-001"][2].date)
    keys = []
    for line in batch.event_lines:
        parts = line.split("\t")
        keys.append((parts[1], parts[0]))
    assert keys == sorted(keys)


def test_same_date_rebuild_has_same_id_and_digest(sim_month):
    sim, result = sim_month
    g = _gateway(sim)
    _fill_day(g, sim, result, day_index=2)
    date = result.traces["home-001"][2].date
    b1 = g.build_sync_batch(date)
    b2 = g.build_sync_batch(date)
    assert b1.batch_id == b2.batch_id
    assert b1.digest == b2.digest
    assert b1.serialize() == b2.serialize()


class FlakyTransport:
    def __init__(self, fail_times=0):
        self.fail_times = fail_times
        self.batches = []

    def post_batch(self, text):
        if self.fail_times > 0:
            self.fail_times -= 1
            raise gw.TransportError("down")
        self.batches.append(text)
        return "accepted"


def test_sync_retry_later_and_pending_queue(sim_month):
    sim, result = sim_month
    g = _gateway(sim)
    _fill_day(g, sim, result, day_index=0)
    date = result.traces["home-001"][0].date
    transport = FlakyTransport(fail_times=2)
    assert g.sync_day(date, transport) == "retry-later"
    assert len(g.pending) == 1
    assert g.sync_pending(transport) == ["retry-later"]
    assert g.sync_pending(transport) == ["accepted"]
    assert g.pending == {}
    assert len(transport.batches) == 1


def test_durability_every_acked_event_in_exactly_one_batch(sim_month):
    """With eventual connectivity, each ingested non-location event appears in
    exactly one delivered batch."""
    from homedrift import codec

    sim, result = sim_month
    g = _gateway(sim)
    ingested = []
    for i in range(4):
        for e in result.traces["home-001"][i].to_events():
            g.ingest_local(e)
            if e.kind is not DeviceKind.LOCATION_SOURCE:
                ingested.append((e.device_id, e.timestamp))
    transport = FlakyTransport(fail_times=3)
    for i in range(4):
        g.sync_day(result.traces["home-001"][i].date, transport)
    while g.pending:
        g.sync_pending(transport)
    delivered = []
    for text in transport.batches:
        for line in gw.SyncBatch.parse(text).event_lines:
            e = codec.parse_event(line)
            delivered.append((e.device_id, e.timestamp))
    assert sorted(delivered) == sorted(ingested)
    assert len(set(delivered)) == len(delivered)


def test_fault_windows_feed_reports():
    faults = FaultSpec((Fault("device-dropout", 0, 1, device_role="watch", start_min=0, end_min=0),))
    sim = make_home(seed=8, faults=faults)
    windows = fault_windows(sim, START, 2)
    result = simulate([sim], START, 2, seed=8, keep_traces=True)
    g = _gateway(sim)
    _fill_day(g, sim, result, day_index=0)
    report = g.daily_missing_report(START, now=result.traces["home-001"][0].day_start_utc + 90000)
    watch = {d.device_id: d for d in report.devices}[sim.roles["watch"]]
    assert watch.observed == 0
    assert watch.expected == watch.missed == 288
