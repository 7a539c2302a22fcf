//! Subcommand bodies: each binds core operations into one experiment.

use std::sync::Arc;

use clap::ValueEnum;
use num_complex::Complex64;
use parex_core::extension::{extend, FrequencySet};
use parex_core::funcrep::{QuadratureRule, SampledFunction};
use parex_core::grid::{ball_lattice, build_grid, classify_triple, dedup_unordered, nu_disjoint_triples, SquareRecord, TripleClass};
use parex_core::inequality::families::modulated_bump;
use parex_core::inequality::{
    classify_center, qr_sweep, random_signs, square_function, trilinear_norm, weight_field, AlpertSetup, BGParams,
    CaseLabel, WeightOptions,
};
use parex_core::report::{ratio, RatioReport, SweepPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::criteria::{self, centered, extend_options, first_triple};
use crate::outcome::{Check, CliError, RunOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Grid,
    AlpertCheck,
    Extend,
    QrScan,
    TrilinearScan,
    AnnularScan,
    Convolve,
    RescaleCheck,
    BgClassify,
    Sqfn,
    EpsMc,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Grid => "grid",
            Subcommand::AlpertCheck => "alpert-check",
            Subcommand::Extend => "extend",
            Subcommand::QrScan => "qr-scan",
            Subcommand::TrilinearScan => "trilinear-scan",
            Subcommand::AnnularScan => "annular-scan",
            Subcommand::Convolve => "convolve",
            Subcommand::RescaleCheck => "rescale-check",
            Subcommand::BgClassify => "bg-classify",
            Subcommand::Sqfn => "sqfn",
            Subcommand::EpsMc => "eps-mc",
        }
    }

    pub fn run(&self, cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
        match self {
            Subcommand::Grid => grid(cfg),
            Subcommand::AlpertCheck => Ok(RunOutput {
                checks: vec![
                    criteria::alpert_construction(&cfg.alpert)?,
                    criteria::smooth_moments(&cfg.alpert)?,
                    criteria::frame_reconstruction(&cfg.alpert, cfg.seed)?,
                ],
                ..Default::default()
            }),
            Subcommand::Extend => extend_cmd(cfg),
            Subcommand::QrScan => qr_scan(cfg),
            Subcommand::TrilinearScan => trilinear_scan(cfg),
            Subcommand::AnnularScan => {
                let (c10, mut reports) = criteria::kappa_moment_decay(&cfg.annular, cfg.seed)?;
                let (c11, low) = criteria::low_scale_decay(&cfg.annular, cfg.seed)?;
                reports.push(low);
                Ok(RunOutput { checks: vec![c10, c11], reports, ..Default::default() })
            }
            Subcommand::Convolve => {
                let (check, density) = criteria::convolution_oracle(&cfg.convolve, cfg.seed)?;
                let mut out = RunOutput { checks: vec![check], data: serde_json::from_str(&density.header_json()).unwrap_or_default(), ..Default::default() };
                if cfg.convolve.write_density {
                    let mut buf = Vec::new();
                    density.write_csv(&mut buf)?;
                    out.density_csv = Some(String::from_utf8_lossy(&buf).into_owned());
                }
                Ok(out)
            }
            Subcommand::RescaleCheck => Ok(RunOutput { checks: vec![criteria::rescaling_identity(&cfg.rescale, cfg.seed)?], ..Default::default() }),
            Subcommand::BgClassify => bg_classify(cfg),
            Subcommand::Sqfn => sqfn(cfg),
            Subcommand::EpsMc => {
                let (check, rep) = criteria::martingale_exponent(&cfg.eps, cfg.seed)?;
                Ok(RunOutput { checks: vec![check], reports: vec![rep], ..Default::default() })
            }
        }
    }
}

fn grid(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let c = &cfg.grid;
    let d = centered(c.side)?;
    let g = build_grid(&d, c.level)?;
    let area: f64 = g.squares.iter().map(|q| q.side() * q.side()).sum();
    let expected = 1usize << (2 * c.level);
    let tiling = Check::new(
        "tiling",
        g.len() == expected && (area - c.side * c.side).abs() <= 1e-12 * c.side * c.side,
        g.len() as f64,
        Some(expected as f64),
        format!("G_{} has {} squares covering area {area}", c.level, g.len()),
    );
    let t = build_grid(&d, c.triple_level)?;
    let mut counts = [0usize; 3];
    for a in &t.squares {
        for b in &t.squares {
            for e in &t.squares {
                if a == b || a == e || b == e {
                    continue;
                }
                counts[match classify_triple(&[*a, *b, *e])? {
                    TripleClass::Gamma1 => 0,
                    TripleClass::Gamma2 => 1,
                    TripleClass::Gamma3 => 2,
                }] += 1;
            }
        }
    }
    let disjoint = dedup_unordered(&nu_disjoint_triples(&t.squares, &t.squares, &t.squares, c.nu)?);
    let triples = Check::report(
        "triples",
        disjoint.len() as f64,
        format!(
            "level {}: ordered distinct triples Γ₁ {} / Γ₂ {} / Γ₃ {}; {} unordered {}-disjoint triples",
            c.triple_level, counts[0], counts[1], counts[2], disjoint.len(), c.nu
        ),
    );
    let squares: Vec<SquareRecord> = g.squares.iter().map(SquareRecord::from).collect();
    let dis: Vec<[SquareRecord; 3]> = disjoint.iter().map(|t| t.each_ref().map(SquareRecord::from)).collect();
    Ok(RunOutput {
        checks: vec![tiling, triples],
        data: json!({ "squares": squares, "triple_classes": counts, "nu_disjoint": dis }),
        ..Default::default()
    })
}

fn extend_cmd(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let c = &cfg.extend;
    let mut out = RunOutput {
        checks: vec![criteria::extension_sanity(c, cfg.seed)?, criteria::modulation_identity(c, cfg.seed)?],
        ..Default::default()
    };
    if c.field_points > 0 {
        let f = criteria::extension_test_function(c)?;
        let set = FrequencySet::ball(c.radius, c.field_points, cfg.seed);
        let field = extend(&f, &set, &extend_options(c))?;
        let mut buf = Vec::new();
        field.write_csv(&mut buf)?;
        out.field_csv = Some(String::from_utf8_lossy(&buf).into_owned());
        out.data = json!({ "field_certificate": field.certificate });
    }
    Ok(out)
}

fn qr_scan(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let c = &cfg.qr;
    let d = centered(1.0)?;
    let rep = qr_sweep(c.q, &c.ks, c.per_shell, &c.family, &d, cfg.seed, &QuadratureRule::new(c.order, 1), &Default::default())?;
    let monotone = rep.sweep.windows(2).all(|w| w[1].ratio >= w[0].ratio);
    let checks = vec![
        Check::new("qr-monotone", monotone, rep.ratio, None, format!("Q_R over R = 2^{:?} nondecreasing", c.ks)),
        Check::report("qr-exponent", rep.exponent.unwrap_or(f64::NAN), format!("fitted growth exponent {:?}, maximizer {}", rep.exponent, rep.detail)),
    ];
    Ok(RunOutput { checks, reports: vec![rep], ..Default::default() })
}

fn trilinear_scan(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let c = &cfg.trilinear;
    let holder = criteria::holder_dominance(c, cfg.seed)?;
    let triple = first_triple(1.0, c.square_level, c.nu)?;
    let rule = QuadratureRule::new(c.order, 1);
    let fs: Vec<SampledFunction> =
        triple.iter().enumerate().map(|(k, u)| random_signs(u, c.sign_level, cfg.seed + k as u64, &rule)).collect::<Result<_, _>>()?;
    let kmax = c.ks.iter().copied().max().unwrap_or(0);
    let set = FrequencySet::dyadic_ball(kmax, c.per_shell, cfg.seed);
    let opts = Default::default();
    let e: Vec<Vec<Complex64>> = fs.iter().map(|f| extend(f, &set, &opts).map(|x| x.values)).collect::<Result<_, _>>()?;
    let rhs: f64 = fs.iter().map(|f| f.max_abs()).product();
    let sweep: Vec<SweepPoint> = c
        .ks
        .iter()
        .map(|&k| {
            let n = c.per_shell * (k as usize + 1);
            let lhs = trilinear_norm([&e[0][..n], &e[1][..n], &e[2][..n]], &set.weights[..n], c.q);
            SweepPoint { x: k as f64, lhs, rhs, ratio: ratio(lhs, rhs) }
        })
        .collect();
    let mut rep = RatioReport::new("trilinear-sweep", c.q, format!("dyadic_ball(k≤{kmax})"), 0.0, 0.0, cfg.seed).with_sweep(sweep);
    rep.nu = Some(c.nu);
    rep.scales = c.ks.iter().map(|&k| k as i64).collect();
    rep.detail = format!("triple {:?}", triple.map(|q| q.index));
    let exp = Check::report("trilinear-exponent", rep.exponent.unwrap_or(f64::NAN), format!("fitted growth exponent {:?}", rep.exponent));
    Ok(RunOutput { checks: vec![holder, exp], reports: vec![rep], ..Default::default() })
}

#[derive(Serialize)]
struct CenterLabel {
    center: [f64; 3],
    label: CaseLabel,
    max_weight: f64,
    cap_constant: f64,
}

fn bg_classify(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let c = &cfg.bg;
    let mut checks = vec![criteria::closed_forms(c)?, criteria::zeta_cap(c, cfg.seed)?];
    let params = BGParams { separation_prefactor: c.separation_prefactor, ..BGParams::with_lambda_prime(c.lambda_prime) };
    params.validate()?;
    let d = centered(1.0)?;
    let g = build_grid(&d, c.lambda)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let side = g.squares[0].side();
    let bumps: Vec<([f64; 2], [f64; 3])> = (0..c.bumps)
        .map(|_| {
            let q = g.squares[rng.gen_range(0..g.len())];
            (q.center(), [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)])
        })
        .collect();
    let parts: Vec<_> = bumps.iter().map(|(ctr, z)| modulated_bump(*ctr, 0.4 * side, *z)).collect();
    let fine = build_grid(&d, c.lambda + 1)?;
    let f = SampledFunction::sample(|x| parts.iter().map(|p| p(x)).sum(), &fine, &QuadratureRule::new(6, 1))?;
    let mut lattice = ball_lattice(c.lambda, (c.lambda as f64 + 1.0).exp2()).centers;
    lattice.truncate(c.centers);
    let opts = WeightOptions { samples: c.samples, seed: cfg.seed, ..Default::default() };
    let mut labels = Vec::new();
    let mut tally = [0usize; 3];
    let mut cap: f64 = 0.0;
    for a in lattice {
        let wf = weight_field(&f, &g, a, &opts)?;
        let label = classify_center(&wf, &params)?;
        tally[match label {
            CaseLabel::Case1 { .. } => 0,
            CaseLabel::Case2 => 1,
            CaseLabel::Case3 { .. } => 2,
        }] += 1;
        cap = cap.max(wf.cap_constant);
        labels.push(CenterLabel { center: a, label, max_weight: wf.max_weight, cap_constant: wf.cap_constant });
    }
    checks.push(Check::report(
        "case-classification",
        cap,
        format!("{} centers: Case 1/2/3 = {}/{}/{}; weight cap constant C = {cap:.3}", labels.len(), tally[0], tally[1], tally[2]),
    ));
    Ok(RunOutput { checks, data: json!({ "params": params, "centers": labels }), ..Default::default() })
}

fn sqfn(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let c = &cfg.sqfn;
    let d = parex_core::grid::BaseDomain::unit();
    let k = parex_core::grid::DyadicSquare::root(&d);
    let f = random_signs(&k, c.sign_level, cfg.seed, &QuadratureRule::new(3, 1))?;
    let setup = AlpertSetup::plain(Arc::new(parex_core::alpert::SmoothBasis::new(c.kappa, c.eta)?));
    let set = FrequencySet::ball(c.radius, c.points, cfg.seed);
    let sq = square_function(&f, &k, c.s, &d.rect(), &set, &setup, parex_core::alpert::MeshSpec::COARSE)?;
    let kh = sq.khintchine_ratio(c.draws, cfg.seed);
    let dominated = sq.terms.iter().all(|t| t.iter().zip(&sq.values).all(|(v, s)| v.norm() <= s * (1.0 + 1e-12)));
    Ok(RunOutput {
        checks: vec![
            Check::new("sqfn-dominates-terms", dominated, sq.terms.len() as f64, None, format!("{} terms over {} frequencies", sq.terms.len(), set.len())),
            Check::new(
                "khintchine",
                (c.lower..=c.upper).contains(&kh),
                kh,
                Some(c.upper),
                format!("mean E_±|Σ ±EΔ_I f| / S_Fourier f = {kh:.3} over {} draws (accepted [{:.3}, {}])", c.draws, c.lower, c.upper),
            ),
        ],
        data: json!({ "s_fourier": sq.values }),
        ..Default::default()
    })
}
