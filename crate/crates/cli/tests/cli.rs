use wall_lab_cli::{run, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};

fn run_args(args: &str) -> (i32, String, String) {
    let argv: Vec<String> = std::iter::once("wall-lab").chain(args.split_whitespace()).map(String::from).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Column `name` of the CSV body as numbers.
fn column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines().skip(1);
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

#[test]
fn delay_examples() {
    let (code, out, _) = run_args("delay --L -1 --k0 1");
    assert_eq!(code, EXIT_OK);
    assert_eq!(column(&out, "tau"), [1.0]);
    let (_, out, _) = run_args("delay --L inf --k0 2");
    assert_eq!(column(&out, "tau"), [0.0]);
}

#[test]
fn regularize_error_decreases() {
    let (code, out, _) = run_args("regularize --scheme s311 --c 1 --nu -0.5 --L 1 --E 1 --d-decades 2:8");
    assert_eq!(code, EXIT_OK);
    let err = column(&out, "err");
    assert_eq!(err.len(), 7);
    assert!(err.windows(2).all(|w| w[1] < w[0]), "{err:?}");
}

#[test]
fn kernel_sweep_is_symmetric() {
    let (_, ab, _) = run_args("kernel --L 0 --a 1 --b 2 --T-list 0.5,1,2");
    let (_, ba, _) = run_args("kernel --L 0 --a 2 --b 1 --T-list 0.5,1,2");
    assert_eq!(column(&ab, "re").len(), 3);
    assert_eq!(column(&ab, "re"), column(&ba, "re"));
    assert_eq!(column(&ab, "im"), column(&ba, "im"));
}

#[test]
fn wkb_delta_sweep_reaches_pi() {
    let (code, out, _) = run_args("wkb --sub deltas --scheme s512 --d-decades 2:4");
    assert_eq!(code, EXIT_OK);
    let ds = column(&out, "delta_S");
    assert!((ds.last().unwrap() - std::f64::consts::PI).abs() <= 1e-3, "{ds:?}");
}

#[test]
fn bound_sweep_is_negative() {
    let (_, out, _) = run_args("classical --sub bound --L -1 --W-list 0.1,0.5,1,5,10");
    let x = column(&out, "x_quadrature");
    assert_eq!(x.len(), 5);
    assert!(x.iter().all(|&v| v < 0.0));
}

#[test]
fn grid_rows_follow_declared_key_order() {
    let (_, out, _) = run_args("wkb --sub al --L -1 --a-list 1,2 --T-list 10,20");
    let a = column(&out, "a");
    let t = column(&out, "T");
    assert_eq!(a, [1.0, 1.0, 2.0, 2.0]);
    assert_eq!(t, [10.0, 20.0, 10.0, 20.0]);
}

#[test]
fn argument_errors_exit_with_two() {
    for args in [
        "delay --L 1 --k0 1 --bogus 3",
        "delay --L 1",
        "delay --L nan --k0 1",
        "delay --L 1 --k0 -1",
        "kernel --L 0 --a 1 --b 2 --T 1 --method magic",
        "regularize --scheme s999 --L 1 --E 1",
        "regularize --scheme s311 --L 1 --E 1 --d-decades 8:2",
        "classical --sub weak-delay --L -1 --E-list 0.5,1 --x0-list 3,4 --c 0.5",
        "classical --sub bound --L -1 --E-list 1,2 --x0-list 3,4 --W-list 1,2",
        "wkb --sub wkbkernel --L 1 --a 1 --b 2 --T 1",
        "nonsense",
    ] {
        let (code, out, err) = run_args(args);
        assert_eq!(code, EXIT_USAGE, "{args}: {out}{err}");
        assert!(!err.is_empty() && out.is_empty(), "{args}");
    }
}

#[test]
fn numerical_failures_exit_with_three() {
    // no direct path inside the barrier at such a long time
    let (code, _, err) = run_args("wkb --sub action --L 1 --a 0.1 --b 0.2 --T 100");
    assert_eq!(code, EXIT_NUMERICAL);
    assert!(err.contains("bounce_quantities"), "{err}");
}

#[test]
fn help_exits_cleanly() {
    let (code, out, _) = run_args("kernel --help");
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("--T-list"));
}
