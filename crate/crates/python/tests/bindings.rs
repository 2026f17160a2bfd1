mod common;

use common::eval;

#[test]
fn template_defaults_and_ticks() {
    let ticks: usize = eval(
        "sheet = pt.Template(event_ticks=[('a', 50.0), ('b', 120.0)])\n\
         assert sheet.time_axis_len_mm == 200.0\n\
         result = sheet.render_svg().count('class=\"tick\"')",
    )
    .unwrap();
    assert_eq!(ticks, 2);
}

#[test]
fn invalid_template_raises() {
    let msg: String = eval(
        "try:\n    pt.Template(time_axis_len_mm=-1.0)\n    result = ''\nexcept pt.PresenceTraceError as e:\n    result = str(e)",
    )
    .unwrap();
    assert!(msg.contains("time_axis_len_mm"), "{msg}");
}

#[test]
fn fatal_validation_raises_with_issue_code() {
    let msg: String = eval(
        "raw = {'samples': [[0, 0], [50, 10], [40, 10], [200, -36]], 'source': {'participant_id': 'P'}}\n\
         issues = pt.validate_trace(raw)\n\
         assert issues[0]['severity'] == 'fatal'\n\
         try:\n    pt.normalize(raw)\n    result = ''\nexcept ValueError as e:\n    result = str(e)",
    )
    .unwrap();
    assert!(msg.contains("x-decreasing"), "{msg}");
}

#[test]
fn segment_phases_labels_a_simple_drawing() {
    let kinds: Vec<String> = eval(
        "pts = [(i / 100, min(i / 25, 0.8) if i <= 60 else 0.8 - (i - 60) / 25) for i in range(101)]\n\
         result = [p['kind'] for p in pt.segment_phases(pts)]",
    )
    .unwrap();
    assert_eq!(kinds, ["raising", "constant", "dropping"]);
}

#[test]
fn store_round_trips_records() {
    let n: usize = eval(
        "traces, events = pt.fixture('intensity')\n\
         store = pt.Store()\n\
         for t in traces:\n    store.write_record(pt.analyze(t, events['groups']['A']))\n\
         assert store.records()[0]['status'] == 'analyzed'\n\
         result = len(store)",
    )
    .unwrap();
    assert_eq!(n, 10);
}

#[test]
fn unknown_fixture_is_a_key_error() {
    let ok: bool = eval("try:\n    pt.fixture('nope')\n    result = False\nexcept KeyError:\n    result = True").unwrap();
    assert!(ok);
}
