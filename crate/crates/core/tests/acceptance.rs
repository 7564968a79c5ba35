//! Acceptance checks. Each criterion prints one PASS/FAIL line with the
//! measured quantity, its pinned tolerance and the runtime limit; the
//! process exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{rngs::StdRng, Rng, SeedableRng};
use weighted_gelfand::bifurcation::{self, BetaStar, DiagramType};
use weighted_gelfand::integrator::transform::{shift_of_beta, v_of_w, w_of_v};
use weighted_gelfand::integrator::{picard_solve_t, transform::singular_flux_defect, EmdenFowler};
use weighted_gelfand::model::{self, EnergyVerdict, Exponent};
use weighted_gelfand::stability::{self, Morse, PiecewiseLinear};
use weighted_gelfand::{cli, intersections, ProblemConfig};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, u64);

fn exp(k: f64) -> ProblemConfig {
    ProblemConfig::exponential(k).unwrap()
}

fn pow(k: f64, p: f64) -> ProblemConfig {
    ProblemConfig::power(k, p).unwrap()
}

fn acceptance_configs() -> [ProblemConfig; 5] {
    [exp(0.2), exp(1.0), pow(1.0, 2.5), pow(1.0, 4.0), pow(0.1, 2.0)]
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> bool) -> f64 {
    // f(lo) false, f(hi) true
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Roots of `(kp/(p-1))(1 - k/(p-1)) = 1/4` by bisection in `x = k/(p-1)`,
/// where the relation reads `(x + k)(1 - x) = 1/4`.
fn jl_by_bisection(k: f64) -> (f64, Option<f64>) {
    let g = |x: f64| (x + k) * (1.0 - x) - 0.25;
    let peak = (1.0 - k) / 2.0;
    // larger root in x is the smaller exponent
    let x_hi = bisect(peak.max(0.0), 1.0, |x| g(x) < 0.0);
    let minus = 1.0 + k / x_hi;
    let plus = (peak > 0.0 && g(0.0) < 0.0).then(|| {
        let x_lo = bisect(0.0, peak, |x| g(x) > 0.0);
        1.0 + k / x_lo
    });
    (minus, plus)
}

fn criterion_1() -> Check {
    let mut worst: f64 = 0.0;
    for k in [0.1, 0.25, 1.0] {
        let ex = model::critical_exponents(k).unwrap();
        ensure(ex.p_s == k + 1.0 && ex.p_c == 2.0 * k + 1.0, format!("p_s/p_c at k={k}: {} {}", ex.p_s, ex.p_c))?;
        let (minus, plus) = jl_by_bisection(k);
        worst = worst.max((ex.p_jl_minus - minus).abs());
        match (ex.p_jl_plus, plus) {
            (Exponent::Finite(a), Some(b)) => worst = worst.max((a - b).abs()),
            (Exponent::Infinite, None) => {}
            (a, b) => return Err(format!("p_jl_plus at k={k}: {a:?} vs bisection {b:?}")),
        }
    }
    let m1 = model::critical_exponents(1.0).unwrap().p_jl_minus;
    let p01 = model::critical_exponents(0.1).unwrap().p_jl_plus.finite().unwrap_or(f64::NAN);
    ensure((m1 - 2.154701).abs() <= 1e-6, format!("p_JL-(1) = {m1}"))?;
    ensure((p01 - 1.452753).abs() <= 1e-6, format!("p_JL+(0.1) = {p01}"))?;
    ensure(worst <= 1e-9, format!("closed form vs bisection {worst:e}"))?;
    Ok(format!("p_JL-(1)={m1:.7}, p_JL+(0.1)={p01:.7} (tol 1e-6); bisection gap {worst:.1e}"))
}

/// `W` written out from its definition, with `v_t`, `v_tt`.
fn w_oracle(config: &ProblemConfig, t: f64) -> (f64, f64, f64) {
    let k = config.k();
    match config.p() {
        None => (k * t + k.ln(), k, 0.0),
        Some(p) => {
            let theta = k / (p - 1.0);
            let a = (theta * (1.0 - theta)).powf(1.0 / (p - 1.0));
            let w = a * (theta * t).exp();
            (w, theta * w, theta * theta * w)
        }
    }
}

fn criterion_2() -> Check {
    let configs = [exp(0.2), exp(1.0), pow(1.0, 3.0), pow(1.0, 4.0), pow(0.1, 2.0)];
    let ts: Vec<f64> = (0..=600).map(|i| -30.0 + 0.1 * i as f64).collect();
    let (mut res, mut oracle_gap, mut flux): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for c in &configs {
        let sol = model::singular_solution(c);
        for &t in &ts {
            res = res.max(model::singular_residual_t(c, t));
            let (w, wt, wtt) = w_oracle(c, t);
            oracle_gap = oracle_gap.max((sol.w_of_t(t) - w).abs() / w.abs().max(1.0));
            // residual of the oracle itself, independent of the library
            let f = c.source(w);
            let scale = wtt.abs().max(wt.abs()).max((-c.k() * t).exp() * f);
            oracle_gap = oracle_gap.max((wtt - wt + (-c.k() * t).exp() * f).abs() / scale);
        }
        if c.is_exponential() {
            flux = flux.max(singular_flux_defect(c, &ts));
        }
    }
    ensure(res <= 1e-8, format!("max residual {res:e}"))?;
    ensure(oracle_gap <= 1e-12, format!("closed form differs from oracle by {oracle_gap:e}"))?;
    ensure(flux <= 1e-9, format!("flux defect {flux:e}"))?;
    Ok(format!("max residual {res:.1e} (tol 1e-8), exp flux defect {flux:.1e} (tol 1e-9)"))
}

fn criterion_3() -> Check {
    let cases = [
        (exp(0.2), vec![-2.0, 0.0, 2.0, 5.0]),
        (exp(1.0), vec![-2.0, 0.0, 2.0, 5.0]),
        (pow(1.0, 3.0), vec![0.5, 1.0, 2.0]),
        (pow(1.0, 4.0), vec![0.5, 1.0, 2.0]),
        (pow(0.1, 2.0), vec![0.5, 1.0, 2.0]),
    ];
    let mut worst: f64 = 0.0;
    for (c, betas) in cases {
        let orbit = bifurcation::canonical_trajectory(&c, -80.0).map_err(|e| e.to_string())?;
        for beta in betas {
            let sol = picard_solve_t(&c, beta, 0.0, 1e-10).map_err(|e| e.to_string())?;
            let (vp, _) = sol.value_at_t(0.0).map_err(|e| e.to_string())?;
            let [w, dw] = orbit.eval(orbit.s_of_beta(beta).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let (vt, _) = v_of_w(&c, 0.0, w, dw);
            let rel = (vp - vt).abs() / vp.abs();
            ensure(rel <= 1e-6, format!("{} β={beta}: Picard {vp} vs transformed {vt}", c.label()))?;
            worst = worst.max(rel);
        }
    }
    Ok(format!("max relative gap at r=1: {worst:.1e} (tol 1e-6)"))
}

fn criterion_4() -> Check {
    let mut worst: f64 = 0.0;
    for c in [exp(1.0), pow(1.0, 4.0)] {
        // ŵ(s) reconstructed from the Picard solution for one β
        let reconstruct = |beta: f64| -> Result<Vec<(f64, f64)>, String> {
            let sol = picard_solve_t(&c, beta, -10.0, 1e-10).map_err(|e| e.to_string())?;
            let shift = shift_of_beta(&c, beta).map_err(|e| e.to_string())?;
            Ok(sol.samples.iter().map(|x| (x.t - shift, w_of_v(&c, x.t, x.v, x.dv_dt).0)).collect())
        };
        let a = reconstruct(1.0)?;
        let b = reconstruct(4.0)?;
        let lo = a[0].0.max(b[0].0);
        let hi = a.last().unwrap().0.min(b.last().unwrap().0);
        ensure(hi - lo > 5.0, format!("overlap [{lo}, {hi}] too short"))?;
        for &(s, w) in a.iter().filter(|x| x.0 >= lo && x.0 <= hi) {
            let j = b.partition_point(|x| x.0 < s).clamp(2, b.len() - 2);
            // cubic Lagrange interpolation on b's grid
            let nodes = &b[j - 2..j + 2];
            let wb: f64 = (0..4)
                .map(|i| {
                    let li: f64 = (0..4).filter(|&m| m != i).map(|m| (s - nodes[m].0) / (nodes[i].0 - nodes[m].0)).product();
                    li * nodes[i].1
                })
                .sum();
            worst = worst.max((w - wb).abs());
        }
    }
    ensure(worst <= 1e-6, format!("sup difference {worst:e}"))?;
    Ok(format!("sup |ŵ_β=1 - ŵ_β=4| = {worst:.1e} (tol 1e-6)"))
}

fn lyapunov_samples(c: &ProblemConfig, s_min: f64) -> Result<Vec<(f64, f64, f64)>, String> {
    let orbit = bifurcation::canonical_trajectory(c, s_min).map_err(|e| e.to_string())?;
    let sys = EmdenFowler::new(c);
    let mut out: Vec<(f64, f64, f64)> = orbit
        .trajectory
        .samples
        .iter()
        .filter(|x| x.s >= s_min)
        .map(|x| (x.s, sys.lyapunov(x.w, x.dw), sys.lyapunov_scale(x.w, x.dw)))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

fn criterion_5() -> Check {
    let slack = |xs: &[(f64, f64, f64)], sign: f64| xs.windows(2).map(|w| (sign * (w[0].1 - w[1].1)).max(0.0)).fold(0.0, f64::max);
    let e1 = lyapunov_samples(&exp(1.0), -40.0)?;
    let d_exp = slack(&e1, 1.0);
    ensure(d_exp <= 1e-9, format!("exp k=1 decrease {d_exp:e}"))?;
    let pc = lyapunov_samples(&pow(1.0, 3.0), -20.0)?;
    let l0 = pc.last().unwrap().1;
    // L vanishes on this orbit, and so do its terms at the saddle, so the
    // drift is measured against the largest term magnitude on the window
    let scale = pc.iter().map(|x| x.2).fold(0.0, f64::max);
    let drift = pc.iter().map(|x| (x.1 - l0).abs()).fold(0.0, f64::max) / scale;
    ensure(pc[0].0 <= -20.0 + 1e-9, format!("p=p_c orbit only reaches s = {}", pc[0].0))?;
    ensure(drift <= 1e-7, format!("p=p_c drift {drift:e}"))?;
    let p4 = lyapunov_samples(&pow(1.0, 4.0), -40.0)?;
    let d4 = slack(&p4, 1.0);
    let p25 = lyapunov_samples(&pow(1.0, 2.5), -40.0)?;
    let d25 = slack(&p25, -1.0);
    ensure(d4 <= 1e-9, format!("p=4 decrease {d4:e}"))?;
    ensure(d25 <= 1e-9, format!("p=2.5 increase {d25:e}"))?;
    ensure(p4.last().unwrap().1 > p4[0].1 && p25.last().unwrap().1 < p25[0].1, "net change has the wrong sign".into())?;
    Ok(format!(
        "exp slack {d_exp:.1e}, p=4 slack {d4:.1e}, p=2.5 slack {d25:.1e} (tol 1e-9); p=p_c relative drift {drift:.1e} (tol 1e-7)"
    ))
}

/// `β*` from the Picard solver alone: the largest `β` whose solution stays
/// positive up to `r = 1`.
fn beta_star_oracle(c: &ProblemConfig) -> f64 {
    let vanishes = |beta: f64| {
        let sol = picard_solve_t(c, beta, 0.0, 1e-10).unwrap();
        sol.zero_crossing.is_some() || sol.value_at_t(0.0).map(|v| v.0 <= 0.0).unwrap_or(true)
    };
    let mut hi = 1.0;
    while !vanishes(hi) {
        hi *= 2.0;
    }
    bisect(0.0, hi, vanishes)
}

fn criterion_6() -> Check {
    let mut lines = Vec::new();
    let mut slowest = Duration::ZERO;
    for c in acceptance_configs() {
        let start = Instant::now();
        let orbit = bifurcation::canonical_trajectory(&c, -80.0).map_err(|e| e.to_string())?;
        let curve = bifurcation::trace_curve_on(&orbit, &bifurcation::default_beta_grid(&orbit)).map_err(|e| e.to_string())?;
        let class = curve.classification.clone().ok_or_else(|| format!("{}: {:?}", c.label(), curve.classification_note))?;
        let empirical = class.empirical.ok_or_else(|| format!("{}: no empirical reading", c.label()))?;
        ensure(empirical == class.predicted, format!("{}: empirical {empirical} vs predicted {}", c.label(), class.predicted))?;
        let tp = curve.turning_points.len();
        let lambda_end = curve.points.last().unwrap().lambda;
        match c.label().as_str() {
            "exp(k=0.2)" => {
                ensure(empirical == DiagramType::TypeII && tp == 0, format!("exp 0.2: {empirical}, {tp} turning points"))?;
                ensure((lambda_end - 0.2).abs() <= 1e-3, format!("exp 0.2: λ_end {lambda_end}"))?;
            }
            "exp(k=1)" => {
                let grid: Vec<f64> = (0..=4000).map(|i| 0.01 * i as f64).collect();
                let window = bifurcation::trace_curve_on(&orbit, &grid).map_err(|e| e.to_string())?;
                let sc = bifurcation::sign_changes(window.points.iter().map(|p| p.lambda - 1.0), 1e-12);
                ensure(empirical == DiagramType::TypeI && sc >= 8 && tp >= 6, format!("exp 1: {empirical}, {sc} sign changes, {tp} turning points"))?;
                lines.push(format!("exp1 {sc} sign changes/{tp} folds"));
            }
            "pow(k=1, p=2.5)" => {
                let bs = match curve.beta_star {
                    Some(BetaStar::Finite { value, .. }) => value,
                    other => return Err(format!("pow 1 2.5: β* {other:?}")),
                };
                let oracle = beta_star_oracle(&c);
                let rel = (bs - oracle).abs() / oracle;
                ensure(empirical == DiagramType::Type0 && tp == 1, format!("pow 2.5: {empirical}, {tp} turning points"))?;
                ensure(rel <= 1e-4, format!("β* {bs} vs Picard bisection {oracle}"))?;
                lines.push(format!("β*={bs:.6} vs oracle {oracle:.6} (rel {rel:.1e}, tol 1e-4)"));
            }
            "pow(k=1, p=4)" => {
                let sc = bifurcation::sign_changes(curve.points.iter().map(|pt| pt.lambda - 2.0 / 9.0), 1e-12);
                ensure(empirical == DiagramType::TypeI && sc >= 5, format!("pow 4: {empirical}, {sc} sign changes"))?;
                lines.push(format!("pow4 {sc} sign changes"));
            }
            _ => {
                ensure(empirical == DiagramType::TypeII, format!("pow 0.1 2: {empirical}"))?;
                ensure((lambda_end - 0.09).abs() <= 1e-3, format!("pow 0.1 2: λ_end {lambda_end}"))?;
            }
        }
        ensure(!class.advisory, format!("{}: advisory classification", c.label()))?;
        let elapsed = start.elapsed();
        ensure(elapsed < Duration::from_secs(30), format!("{}: took {elapsed:?}", c.label()))?;
        slowest = slowest.max(elapsed);
    }
    Ok(format!("5/5 configs match; {}; slowest {slowest:.2?} (limit 30 s)", lines.join(", ")))
}

/// A random admissible φ: piecewise linear in τ, vanishing at both ends of
/// its support inside `τ >= 0` (the unit ball with `R = e`).
fn random_test_function(rng: &mut StdRng) -> PiecewiseLinear {
    let start = rng.gen_range(0.0..20.0);
    let n = rng.gen_range(3..12);
    let mut taus: Vec<f64> = (0..n).map(|_| start + rng.gen_range(0.0..30.0)).collect();
    taus.push(start);
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    let last = taus.len() - 1;
    let nodes = taus
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let v = if i == 0 || i == last { 0.0 } else { rng.gen_range(-1.0..1.0) * (0.5 * t).exp() };
            (t, v)
        })
        .collect();
    PiecewiseLinear::new(nodes).unwrap()
}

fn criterion_7() -> Check {
    let target = PI * PI / 4.0;
    let mut worst: f64 = 0.0;
    for n in 0..3 {
        let band = stability::destabilizing_band(0.5, n).map_err(|e| e.to_string())?;
        for (c, expected) in [(0.375, -target), (0.25, target)] {
            let q = stability::hardy_quadratic_form(c, &band, band.big_r).map_err(|e| e.to_string())?;
            worst = worst.max((q - expected).abs() / target);
        }
    }
    ensure(worst <= 1e-6, format!("band relative error {worst:e}"))?;
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut min_q = f64::INFINITY;
    for _ in 0..200 {
        let phi = random_test_function(&mut rng);
        let q = stability::hardy_quadratic_form(0.25, &phi, std::f64::consts::E).map_err(|e| e.to_string())?;
        min_q = min_q.min(q);
    }
    ensure(min_q >= -1e-9, format!("random Q(1/4) = {min_q:e}"))?;
    Ok(format!("band rel error {worst:.1e} (tol 1e-6); min Q(1/4) over 200 random φ = {min_q:.3e} (floor -1e-9)"))
}

fn criterion_8() -> Check {
    for c in acceptance_configs() {
        let k = c.k();
        // Hardy coefficient from its definition: k for e^u, θ p... for (1+u)^p
        let coef = match c.p() {
            None => k,
            Some(p) => (k * p / (p - 1.0)) * (1.0 - k / (p - 1.0)),
        };
        let expected = if coef > 0.25 { Morse::Infinite } else { Morse::Zero };
        let report = stability::morse_classification(&c).map_err(|e| e.to_string())?;
        ensure(report.morse == expected, format!("{}: {:?} vs {expected:?}", c.label(), report.morse))?;
        if expected == Morse::Infinite {
            let negative = report.bands.iter().filter(|b| b.q < 0.0).count();
            let disjoint = report.bands.windows(2).all(|w| w[0].support.1 <= w[1].support.0);
            ensure(negative >= 3 && disjoint, format!("{}: {negative} negative bands, disjoint {disjoint}", c.label()))?;
        }
    }
    Ok("Morse verdicts match c > 1/4 on 5 configs; Infinite verdicts carry >= 3 disjoint negative bands".into())
}

fn criterion_9() -> Check {
    let orbit = |c: ProblemConfig| bifurcation::canonical_trajectory(&c, -80.0).map_err(|e| e.to_string());
    let o = orbit(exp(0.2))?;
    let count = intersections::intersection_count(&o, 1.0, 2.0, (-40.0, 5.0)).map_err(|e| e.to_string())?;
    let sep = intersections::separation_check(&o, 1.0, 2.0, (-40.0, 5.0)).map_err(|e| e.to_string())?;
    ensure(count.count == 0 && sep.separated && sep.family_margin > 0.0 && sep.singular_margin > 0.0, format!("exp 0.2: {count:?} {sep:?}"))?;

    let o = orbit(exp(1.0))?;
    let count = intersections::intersection_count(&o, 1.0, 2.0, (-40.0, 0.0)).map_err(|e| e.to_string())?;
    let expected = 2.0 * PI / (3.0f64.sqrt() / 2.0);
    let period = count.asymptotic_period.unwrap_or(f64::NAN);
    ensure(count.count >= 8, format!("exp 1: {} crossings", count.count))?;
    ensure((period - expected).abs() <= 0.1 * expected, format!("exp 1: spacing {period} vs {expected}"))?;
    let exp1 = count.count;

    let o = orbit(pow(1.0, 4.0))?;
    let pow4 = intersections::intersection_count(&o, 1.0, 2.0, (-40.0, 5.0)).map_err(|e| e.to_string())?.count;
    ensure(pow4 >= 5, format!("pow 4: {pow4} crossings"))?;

    let o = orbit(pow(1.0, 2.5))?;
    let zero = intersections::zero_before_e(&o, 1.0).map_err(|e| e.to_string())?;
    ensure(zero.vanishes, format!("pow 2.5: {zero:?}"))?;
    Ok(format!(
        "exp0.2 separated; exp1 {exp1} crossings, spacing {period:.3} vs {expected:.3} (tol 10%); pow4 {pow4} crossings; pow2.5 zero at t={:.4}",
        zero.t.unwrap_or(f64::NAN)
    ))
}

fn criterion_10() -> Check {
    for (c, expected) in [
        (exp(0.2), EnergyVerdict::Convergent),
        (exp(1.0), EnergyVerdict::Convergent),
        (exp(3.0), EnergyVerdict::Convergent),
        (pow(1.0, 4.0), EnergyVerdict::Convergent),
        (pow(0.1, 2.0), EnergyVerdict::Convergent),
        (pow(1.0, 2.5), EnergyVerdict::Divergent),
    ] {
        let report = model::singular_h1_membership(&c);
        ensure(report.verdict == expected && report.consistent(), format!("{}: {:?}", c.label(), report.verdict))?;
    }
    Ok("convergent for e^u and p > p_c, divergence detected for (pow, 1, 2.5)".into())
}

fn criterion_11() -> Check {
    let cases: [(&[&str], &str); 2] = [
        (&["trace", "--model", "exp", "--k", "-0.5"], "k <= 0"),
        (&["trace", "--model", "pow", "--k", "1", "--p", "1.5"], "p > p_s = k + 1"),
    ];
    for (args, hypothesis) in cases {
        let out = cli::main_with(args.iter().copied());
        ensure(out.code == 2, format!("{args:?}: exit {}", out.code))?;
        ensure(out.stderr.contains(hypothesis), format!("{args:?}: diagnostic {:?}", out.stderr))?;
    }
    Ok("both rejected with exit code 2 and the violated hypothesis quoted".into())
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("exponent table", criterion_1, 1),
        ("singular residuals", criterion_2, 1),
        ("dual-solver oracle", criterion_3, 10),
        ("beta independence", criterion_4, 5),
        ("Lyapunov laws", criterion_5, 5),
        ("type classification", criterion_6, 150),
        ("Hardy quadratic form", criterion_7, 5),
        ("Morse classification", criterion_8, 5),
        ("intersection dichotomy", criterion_9, 10),
        ("H1 membership", criterion_10, 1),
        ("input guards", criterion_11, 1),
    ];
    let mut failures = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = result.and_then(|detail| {
            if elapsed <= Duration::from_secs(*limit) {
                Ok(detail)
            } else {
                Err(format!("{detail}; runtime {elapsed:.2?} over {limit} s"))
            }
        });
        match result {
            Ok(detail) => println!("criterion {:>2} {name}: PASS [{elapsed:.2?}, limit {limit} s] {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} {name}: FAIL [{elapsed:.2?}, limit {limit} s] {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
