use std::path::Path;
use std::process::{Command, Output};

use stmdm::steiner::solve_exact;
use stmdm::{Point64, Tolerance64};
use stmdm_cli::io::{ErrorKind, Problem, SetDescriptor, Terminals};
use stmdm_cli::{parse_instance, render_svg, Failure, InstanceFile, RenderOptions, ResultFile};

const SQUARE: &str = r#"{"dim":2,"problem":"steiner","terminals":[[0,0],[1,0],[1,1],[0,1]]}"#;

fn stmdm(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stmdm"));
    cmd.args(args).env_remove("STMDM_TOL");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "{text}");
    serde_json::from_str(lines[0]).unwrap()
}

#[test]
fn minimal_steiner_instance_parses() {
    let inst = parse_instance(br#"{"dim":2,"problem":"steiner","terminals":[[0,0],[1,0]]}"#).unwrap();
    assert_eq!(inst.problem, Problem::Steiner);
    assert_eq!(inst.schema_version, "1");
    assert_eq!(inst.terminals, Terminals::Points(vec![vec![0.0, 0.0], vec![1.0, 0.0]]));
    assert_eq!(inst.r, None);
}

#[test]
fn mdm_without_r_names_r() {
    let err = parse_instance(br#"{"dim":2,"problem":"mdm","terminals":{"kind":"circle","radius":2}}"#).unwrap_err();
    assert_eq!(err.kind, ErrorKind::MissingField);
    assert_eq!(err.field, "r");
}

#[test]
fn mixed_lengths_are_a_dimension_mismatch() {
    let err = parse_instance(br#"{"dim":2,"problem":"steiner","terminals":[[0,0],[1,0,0],[2,2]]}"#).unwrap_err();
    assert_eq!(err.kind, ErrorKind::DimensionMismatch);
    assert_eq!(err.field, "terminals[1]");
}

#[test]
fn other_validation_errors_name_their_field() {
    let cases: [(&str, ErrorKind, &str); 8] = [
        ("{not json", ErrorKind::Malformed, ""),
        (r#"{"problem":"steiner","terminals":[[0,0],[1,1]]}"#, ErrorKind::MissingField, "dim"),
        (r#"{"dim":2,"problem":"tree","terminals":[[0,0],[1,1]]}"#, ErrorKind::InvalidValue, "problem"),
        (r#"{"dim":2,"problem":"mdm","r":-1,"terminals":[[0,0]]}"#, ErrorKind::InvalidValue, "r"),
        (r#"{"dim":3,"problem":"mdm","r":1,"terminals":{"kind":"circle","radius":2}}"#, ErrorKind::DimensionMismatch, "dim"),
        (r#"{"dim":2,"problem":"mdm","r":1,"terminals":{"kind":"blob"}}"#, ErrorKind::InvalidValue, "terminals.kind"),
        (r#"{"dim":2,"problem":"mdm","r":1,"terminals":{"kind":"stadium","radius":2}}"#, ErrorKind::MissingField, "terminals.seg_len"),
        (r#"{"schema_version":"9","dim":2,"problem":"steiner","terminals":[[0,0],[1,1]]}"#, ErrorKind::UnsupportedVersion, "schema_version"),
    ];
    for (body, kind, field) in cases {
        let err = parse_instance(body.as_bytes()).unwrap_err();
        assert_eq!((err.kind, err.field.as_str()), (kind, field), "{body}");
    }
}

#[test]
fn instances_round_trip() {
    let bodies = [
        SQUARE,
        r#"{"dim":3,"problem":"steiner","terminals":[[0.1,0.2,0.3],[1e-17,2.5,-3],[0.30000000000000004,1,1]]}"#,
        r#"{"dim":2,"problem":"mdm","r":0.25,"terminals":{"kind":"stadium","radius":1.5,"seg_len":2}}"#,
        r#"{"dim":2,"problem":"mdm","r":0.1,"terminals":{"kind":"samples","points":[[0,0],[1,2]]}}"#,
        r#"{"dim":2,"problem":"mdm","r":0.1,"terminals":[[0,0],[1,2]]}"#,
    ];
    for body in bodies {
        let inst = parse_instance(body.as_bytes()).unwrap();
        let again = parse_instance(&serde_json::to_vec(&inst).unwrap()).unwrap();
        assert_eq!(inst, again);
        assert_eq!(inst.digest(), again.digest());
    }
    let a = parse_instance(SQUARE.as_bytes()).unwrap();
    let b = parse_instance(SQUARE.replace("[0,1]", "[0,1.5]").as_bytes()).unwrap();
    assert_ne!(a.digest(), b.digest());
    // whitespace does not change the digest
    let c = parse_instance(SQUARE.replace(',', " , ").as_bytes()).unwrap();
    assert_eq!(a.digest(), c.digest());
}

#[test]
fn descriptors_map_to_the_core_types() {
    let inst = parse_instance(br#"{"dim":2,"problem":"mdm","r":1,"terminals":{"kind":"circle","radius":6}}"#).unwrap();
    assert_eq!(inst.terminals, Terminals::Set(SetDescriptor::Circle { radius: 6.0 }));
    assert!(inst.points().is_none());
    assert_eq!(inst.descriptor(), stmdm::mdm::CompactSetDescriptor::Circle { radius: 6.0 });
}

fn solve_to_result(dir: &Path, body: &str) -> ResultFile {
    let inp = write(dir, "inst.json", body);
    let outp = dir.join("res.json");
    let out = stmdm(&["steiner", "solve", "--in", &inp, "--out", outp.to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    ResultFile::from_json(&std::fs::read(outp).unwrap()).unwrap()
}

#[test]
fn count_prints_the_topology_number() {
    let out = stmdm(&["steiner", "count", "--n", "6"], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "105");
}

#[test]
fn square_solve_writes_the_closed_form_length() {
    let dir = tempfile::tempdir().unwrap();
    let res = solve_to_result(dir.path(), SQUARE);
    // two Steiner points on the midline, 1/(2 sqrt 3) in from the left and right sides
    let h = 0.5 / 3f64.sqrt();
    let s = [(h, 0.5), (1.0 - h, 0.5)];
    let corners = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)];
    let dist = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1);
    let oracle = dist(s[0], corners[0]) + dist(s[0], corners[1]) + dist(s[1], corners[2]) + dist(s[1], corners[3]) + dist(s[0], s[1]);
    assert!((res.length - oracle).abs() <= 1e-6, "{} vs {}", res.length, oracle);
    assert!((res.length - (1.0 + 3f64.sqrt())).abs() <= 1e-6);
    let tree = res.tree.as_ref().unwrap();
    assert_eq!(tree.steiner_points.len(), 2);
    assert_eq!(tree.edges.len(), 5);
    assert_eq!(tree.cominimal.len(), 2);
    assert!(res.solver.converged);
    assert_eq!(res.solver.name, "exact");
    assert_eq!(res.report.max_degree, 3);
    let inst = parse_instance(SQUARE.as_bytes()).unwrap();
    assert!(res.matches(&inst));
    // lossless round trip of the written file
    assert_eq!(ResultFile::from_json(&res.to_json()).unwrap(), res);
}

#[test]
fn commands_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let inp = write(dir.path(), "inst.json", SQUARE);
    let run = |name: &str| {
        let o = dir.path().join(name);
        let out = stmdm(&["steiner", "solve", "--in", &inp, "--out", o.to_str().unwrap()], &[]);
        assert!(out.status.success());
        let svg = dir.path().join(format!("{name}.svg"));
        let out = stmdm(&["render", "--in", o.to_str().unwrap(), "--out", svg.to_str().unwrap()], &[]);
        assert!(out.status.success());
        (std::fs::read(o).unwrap(), std::fs::read(svg).unwrap())
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn usage_errors_exit_with_two() {
    let out = stmdm(&["steiner", "solve", "--frobnicate"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = stmdm(&["steiner", "transmogrify"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = stmdm(&["walk"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validation_errors_exit_with_three_and_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let inp = write(dir.path(), "bad.json", r#"{"dim":2,"problem":"mdm","terminals":[[0,0],[1,1]]}"#);
    let out = stmdm(&["mdm", "solve", "--in", &inp], &[]);
    assert_eq!(out.status.code(), Some(3));
    let e = stderr_json(&out);
    assert_eq!(e["error"], "validation");
    assert_eq!(e["field"], "r");

    let inp = write(dir.path(), "mixed.json", r#"{"dim":2,"problem":"steiner","terminals":[[0,0],[1]]}"#);
    let out = stmdm(&["steiner", "solve", "--in", &inp], &[]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["kind"], "dimension_mismatch");

    // a steiner instance handed to an mdm command
    let inp = write(dir.path(), "sq.json", SQUARE);
    let out = stmdm(&["mdm", "horseshoe", "--in", &inp], &[]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["field"], "problem");

    let inp = write(dir.path(), "circ.json", r#"{"dim":2,"problem":"mdm","r":1,"terminals":{"kind":"circle","radius":3}}"#);
    let out = stmdm(&["mdm", "competitor", "--in", &inp], &[]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["field"], "terminals.kind");

    let out = stmdm(&["steiner", "solve", "--in", "/nonexistent/instance.json"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "io");
}

#[test]
fn non_convergence_has_its_own_code() {
    let f = Failure::NotConverged("relaxation hit the iteration cap".into());
    assert_eq!(f.exit_code(), 4);
    let v: serde_json::Value = serde_json::from_str(&f.line()).unwrap();
    assert_eq!(v["error"], "not_converged");
    assert!(!f.line().contains('\n'));
}

#[test]
fn tolerance_profile_comes_from_flag_or_environment() {
    let dir = tempfile::tempdir().unwrap();
    let inp = write(dir.path(), "inst.json", SQUARE);
    let profile = |args: &[&str], env: &[(&str, &str)]| {
        let mut all = vec!["steiner", "solve", "--in", inp.as_str()];
        all.extend_from_slice(args);
        let out = stmdm(&all, env);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        ResultFile::from_json(&out.stdout).unwrap().solver
    };
    assert_eq!(profile(&[], &[]).profile, "default");
    let loose = profile(&[], &[("STMDM_TOL", "loose")]);
    assert_eq!(loose.profile, "loose");
    assert_eq!(loose.tolerances.eps_len, Tolerance64::loose().eps_len);
    assert_eq!(profile(&["--tol", "strict"], &[("STMDM_TOL", "loose")]).profile, "strict");
    let out = stmdm(&["steiner", "solve", "--in", &inp], &[("STMDM_TOL", "sloppy")]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["field"], "tol");
}

#[test]
fn ratio_prints_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let inp = write(dir.path(), "tri.json", r#"{"dim":2,"problem":"steiner","terminals":[[0,0],[1,0],[0.5,0.8660254037844386]]}"#);
    let csv = dir.path().join("ratio.csv");
    let out = stmdm(&["steiner", "ratio", "--in", &inp, "--csv", csv.to_str().unwrap()], &[]);
    assert!(out.status.success());
    let ratio: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((ratio - 3f64.sqrt() / 2.0).abs() < 1e-7);
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "instance_id,n,d,mst_length,steiner_length,ratio,restricted");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[1], "3");
    assert_eq!(row[6], "false");
}

#[test]
fn mdm_commands_write_covering_networks() {
    let dir = tempfile::tempdir().unwrap();
    let fin = write(dir.path(), "fin.json", r#"{"dim":2,"problem":"mdm","r":0.3,"terminals":[[0,0],[3,0],[1,2]]}"#);
    let out = stmdm(&["mdm", "solve", "--in", &fin], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = ResultFile::from_json(&out.stdout).unwrap();
    assert_eq!(res.solver.name, "finite");
    let cov = res.report.coverage.as_ref().unwrap();
    assert!(cov.covered);
    assert_eq!(res.report.energetic_points.len(), 3);
    assert!(res.report.segment_count.unwrap() <= 3);
    assert_eq!(ResultFile::from_json(&res.to_json()).unwrap(), res);

    let circ = write(dir.path(), "circ.json", r#"{"dim":2,"problem":"mdm","r":1,"terminals":{"kind":"circle","radius":6}}"#);
    let out = stmdm(&["mdm", "horseshoe", "--in", &circ], &[]);
    assert!(out.status.success());
    let res = ResultFile::from_json(&out.stdout).unwrap();
    let cov = res.report.coverage.as_ref().unwrap();
    assert!(cov.covered && cov.max_defect <= 1e-6 * 6.0);
    // a horseshoe is shorter than the full parallel circle and longer than its half
    let full = std::f64::consts::TAU * 5.0;
    assert!(res.length < full && res.length > full / 2.0, "{}", res.length);
    assert!(res.report.is_tree);
}

#[test]
fn experiment_suite_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let suite = write(
        dir.path(),
        "suite.json",
        r#"{"studies":[{"generator":{"kind":"zigzag","n":[3,4]}},{"generator":{"kind":"random","n":[5],"reps":2,"seed":1}}]}"#,
    );
    let csv = |seed: Option<&str>| {
        let mut args = vec!["exp", "run", "--in", suite.as_str()];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        let out = stmdm(&args, &[]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    let a = csv(None);
    assert_eq!(a.lines().count(), 1 + 2 + 2);
    assert!(a.starts_with("instance_id,generator,seed,N,d,solver,length,normalized,norm,wall_time_ms,error"));
    assert_eq!(a, csv(None));
    let b = csv(Some("7"));
    assert_ne!(a, b);
    // repetitions count up from the base seed
    assert!(b.contains("random-d2-n000005-s00000000000000000007,"));
    assert!(b.contains("random-d2-n000005-s00000000000000000008,"));
}

fn square_result() -> ResultFile {
    let dir = tempfile::tempdir().unwrap();
    solve_to_result(dir.path(), SQUARE)
}

fn count(svg: &str, needle: &str) -> usize {
    svg.matches(needle).count()
}

#[test]
fn two_point_segment_renders_two_dots_and_one_path() {
    let dir = tempfile::tempdir().unwrap();
    let res = solve_to_result(dir.path(), r#"{"dim":2,"problem":"steiner","terminals":[[0,0],[2,1]]}"#);
    let svg = String::from_utf8(render_svg(&res, &RenderOptions::default()).unwrap().bytes).unwrap();
    assert_eq!(count(&svg, "<circle"), 2);
    assert_eq!(count(&svg, "<path"), 1);
}

#[test]
fn square_renders_terminals_branches_and_edges() {
    let res = square_result();
    // cross-check the picture against the library solve
    let tol = Tolerance64::default();
    let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)].map(|(x, y)| Point64::xy(x, y));
    let sol = solve_exact(&pts, &tol).unwrap();
    let svg = String::from_utf8(render_svg(&res, &RenderOptions::default()).unwrap().bytes).unwrap();
    assert_eq!(count(&svg, r#"class="terminal""#), 4);
    assert_eq!(count(&svg, r#"class="steiner""#), sol.best.steiner_points().len());
    assert_eq!(count(&svg, r#"class="steiner""#), 2);
    assert_eq!(count(&svg, r#"class="edge""#), sol.best.topology().edges().len());
    assert_eq!(count(&svg, r#"class="edge""#), 5);
}

#[test]
fn rendering_is_byte_identical() {
    let res = square_result();
    let a = render_svg(&res, &RenderOptions::default()).unwrap();
    let b = render_svg(&res, &RenderOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn mdm_render_has_dashed_tube_and_energetic_marks() {
    let dir = tempfile::tempdir().unwrap();
    let fin = write(dir.path(), "fin.json", r#"{"dim":2,"problem":"mdm","r":0.3,"terminals":[[0,0],[3,0],[1,2]]}"#);
    let out = stmdm(&["mdm", "solve", "--in", &fin], &[]);
    let res = ResultFile::from_json(&out.stdout).unwrap();
    let svg = String::from_utf8(render_svg(&res, &RenderOptions::default()).unwrap().bytes).unwrap();
    assert!(svg.contains(r#"class="tube""#) && svg.contains("stroke-dasharray"));
    assert_eq!(count(&svg, r#"class="energetic""#), 3);
    assert_eq!(count(&svg, r#"class="edge""#), res.network.as_ref().unwrap().edges.len());
}

#[test]
fn three_dimensional_results_need_projection() {
    let dir = tempfile::tempdir().unwrap();
    let res = solve_to_result(dir.path(), r#"{"dim":3,"problem":"steiner","terminals":[[0,0,0],[1,0,0],[0,1,0],[0,0,1]]}"#);
    assert!(render_svg(&res, &RenderOptions::default()).is_err());
    let svg = render_svg(
        &res,
        &RenderOptions {
            project: true,
            ..RenderOptions::default()
        },
    )
    .unwrap();
    assert!(svg.warning.is_some());
    let p = dir.path().join("res.json");
    let out = stmdm(&["render", "--in", p.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(3));
    let out = stmdm(&["render", "--in", p.to_str().unwrap(), "--project"], &[]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn instance_file_fields_serialize_in_schema_order() {
    let inst: InstanceFile = parse_instance(SQUARE.as_bytes()).unwrap();
    let text = String::from_utf8(serde_json::to_vec(&inst).unwrap()).unwrap();
    assert!(text.starts_with(r#"{"schema_version":"1","dim":2,"problem":"steiner","terminals":"#));
    assert!(!text.contains("\"r\""));
}
