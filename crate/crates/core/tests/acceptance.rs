//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::time::Instant;

use common::*;
use hybzono::geomio::{project_sample, PolygonSample};
use hybzono::linalg::{hstack, Matrix, Vector};
use hybzono::mld::*;
use hybzono::optq::{self, LeafPointOracle};
use hybzono::reach::*;
use hybzono::setops::{generalized_intersection, halfspace_intersection, linear_map, minkowski_sum, Halfspace};
use hybzono::setrep::{HybridZonotope, SetDims};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Shared runs; the expensive ones are computed once.
struct Runs {
    pwa_plain: ReachResult,
    pwa_reduced: ReachResult,
    rooms_plain: ReachResult,
    rooms_reduced: ReachResult,
}

fn pwa(opts: &ReachOptions) -> hybzono::Result<ReachResult> {
    let (m, d) = build_pwa_two_mode()?;
    reach(&pwa_initial_set(), &m, &d.u, &d.w, opts)
}

fn rooms(opts: &ReachOptions) -> hybzono::Result<ReachResult> {
    let (m, d) = build_heated_rooms(1)?;
    reach(&heated_rooms_initial_set(1)?, &m, &d.u, &d.w, opts)
}

fn leaves(res: &ReachResult) -> Vec<usize> {
    res.trees.as_ref().map(|ts| ts.iter().map(|t| t.len()).collect()).unwrap_or_default()
}

fn c1(r: &Runs) -> Check {
    let dims = r.pwa_plain.final_set().dims();
    let t = *leaves(&r.pwa_plain).last().unwrap_or(&0);
    ensure(dims == SetDims::new(182, 15, 150) && t == 2, || format!("dims {dims:?}, |T| = {t}"))?;
    Ok(format!("dims {dims:?}, |T| = {t}"))
}

fn c2(r: &Runs) -> Check {
    let dims = r.pwa_reduced.final_set().dims();
    let removed = r.pwa_reduced.total_removed_rows();
    let msg = format!("dims {dims:?}, {removed} rows removed");
    ensure(dims == SetDims::new(142, 1, 110) && removed == 40, || msg.clone())?;
    Ok(msg)
}

fn c3(r: &Runs) -> Check {
    let l = leaves(&r.pwa_plain);
    let ok = l.len() == 16 && l[..=3].iter().all(|&n| n == 1) && l[4..].iter().all(|&n| n == 2);
    let red = leaves(&r.pwa_reduced);
    ensure(ok && red == l, || format!("leaves {l:?}, reduced run {red:?}"))?;
    Ok(format!("leaves {l:?}"))
}

fn c4(r: &Runs) -> Check {
    let dims = r.rooms_plain.final_set().dims();
    let t = *leaves(&r.rooms_reduced).last().unwrap_or(&0);
    let msg = format!("dims {dims:?}, |T| = {t}");
    ensure(dims == SetDims::new(1003, 300, 900) && t == 39, || msg.clone())?;
    Ok(msg)
}

fn c5(r: &Runs) -> Check {
    let (pm, pd) = build_pwa_two_mode().map_err(err)?;
    let (hm, hd) = build_heated_rooms(1).map_err(err)?;
    let p0 = pwa_initial_set().dims();
    let h0 = heated_rooms_initial_set(1).map_err(err)?.dims();
    let mut checked = 0;
    for (res, m, u, r0) in [(&r.pwa_plain, &pm, &pd.u, p0), (&r.rooms_plain, &hm, &hd.u, h0)] {
        for (k, z) in res.sets.iter().enumerate() {
            let want = predicted_dims(k, m, u, r0);
            ensure(z.dims() == want, || format!("k = {k}: {:?} vs predicted {want:?}", z.dims()))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} steps match"))
}

fn c6() -> Check {
    let mut r = rng(6001);
    let (mut sets, mut points, mut bad) = (0, 0, 0);
    while sets < 200 {
        let n = r.random_range(1..=3);
        let z = random_hz_in(&mut r, n);
        sets += 1;
        let brute: Vec<_> = oracle_leaves(&z).iter().map(|x| to_assignment(x)).collect();
        let got = optq::enumerate_integer_feasible(&z).map_err(err)?;
        if got.entries() != brute.as_slice() {
            bad += 1;
        }
        let (lo, hi) = interval_hull(&z);
        let feasible = oracle_leaves(&z);
        for i in 0..100 {
            // Half the points come from leaves so both answers occur.
            let p = match feasible.get(i % feasible.len().max(1)).filter(|_| i % 2 == 0) {
                Some(xi) => sample_leaf_point(&z, xi, &mut r).expect("feasible leaf"),
                None => Vector::from_iterator(n, lo.iter().zip(&hi).map(|(a, b)| r.random_range(*a - 0.2..=*b + 0.2))),
            };
            let want = feasible.iter().any(|xi| oracle_leaf_contains(&z, xi, p.as_slice()));
            if optq::contains_point(&z, &p).map_err(err)? != want {
                bad += 1;
            }
            points += 1;
        }
    }
    ensure(bad == 0, || format!("{bad} disagreements"))?;
    Ok(format!("{sets} sets, {points} points, 0 disagreements"))
}

fn nonempty_hz(r: &mut ChaCha8Rng, n: usize) -> HybridZonotope {
    loop {
        let z = random_hz_in(r, n);
        if !oracle_leaves(&z).is_empty() {
            return z;
        }
    }
}

fn c7() -> Check {
    let mut r = rng(7001);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = r.random_range(1..=3);
        let m = r.random_range(1..=3);
        let z = nonempty_hz(&mut r, n);
        let w = nonempty_hz(&mut r, n);
        let map = Matrix::from_fn(m, n, |_, _| r.random_range(-1.5..1.5));
        let rz = linear_map(&map, &z).map_err(err)?;
        let s = minkowski_sum(&z, &w).map_err(err)?;
        for _ in 0..20 {
            let l = random_direction(&mut r, m);
            let a = optq::support(&rz, &l).map_err(err)?.value;
            let b = optq::support(&z, &(map.transpose() * &l)).map_err(err)?.value;
            worst = worst.max((a - b).abs() / (1.0 + a.abs().max(b.abs())));
            let l = random_direction(&mut r, n);
            let a = optq::support(&s, &l).map_err(err)?.value;
            let b = optq::support(&z, &l).map_err(err)?.value + optq::support(&w, &l).map_err(err)?.value;
            worst = worst.max((a - b).abs() / (1.0 + a.abs().max(b.abs())));
        }
    }
    ensure(worst <= 1e-9, || format!("max relative error {worst:.3e}"))?;
    Ok(format!("2000 identities, max relative error {worst:.3e}"))
}

fn preimage(m: &MldSystem, d: &DomainSets, rk: &HybridZonotope, z: &Vector) -> hybzono::Result<HybridZonotope> {
    let mut p = rk.cartesian_product(&d.u).cartesian_product(&d.w);
    let nv = p.dim();
    let e = hstack(m.dims.n_e(), &[&m.ex, &m.eu, &m.ew]);
    for i in 0..m.dims.n_e() {
        let h = Halfspace::degenerate(e.row(i).transpose(), m.eaff[i])?;
        p = halfspace_intersection(&p, &h, &Matrix::identity(nv, nv))?;
    }
    let map = hstack(m.dims.n(), &[&m.a, &m.bu, &m.bw]);
    let target = HybridZonotope::point((z - &m.baff).as_slice())?;
    generalized_intersection(&p, &target, &map)
}

fn c8(r: &Runs) -> Check {
    let res = &r.pwa_plain;
    let trees = res.trees.as_ref().ok_or("no trees")?;
    let mut oracles = Vec::new();
    for (z, t) in res.sets.iter().zip(trees) {
        oracles.push(LeafPointOracle::new(z, t).map_err(err)?);
    }
    let r0 = pwa_initial_set();
    let mut g = rng(8001);
    let mut misses = 0;
    for _ in 0..10_000 {
        let xi = Vector::from_fn(2, |_, _| g.random_range(-1.0..=1.0));
        let mut x = r0.gc() * xi + r0.c();
        for (k, o) in oracles.iter_mut().enumerate() {
            if !o.contains(&x).map_err(|e| format!("trajectory, k = {k}, x = {x:?}: {e}"))? {
                misses += 1;
                break;
            }
            x = pwa_step(&x);
        }
    }
    let (m, d) = build_pwa_two_mode().map_err(err)?;
    let mut infeasible = 0;
    for i in 0..200 {
        let k = i % 15;
        let z = sample_set_point(&res.sets[k + 1], &trees[k + 1], &mut g);
        let p = preimage(&m, &d, &res.sets[k], &z).map_err(err)?;
        if optq::is_empty(&p).map_err(|e| format!("preimage {i}, k = {k}: {e}"))? {
            infeasible += 1;
        }
    }
    ensure(misses == 0 && infeasible == 0, || format!("{misses} trajectories left, {infeasible} empty preimages"))?;
    Ok("10000 trajectories inside, 200 preimages feasible".into())
}

fn c9() -> Check {
    let mut g = rng(9001);
    let mut events = 0;
    let mut worst: f64 = 0.0;
    let mut tree_changes = 0;
    let mut observe = |ev: &ReductionEvent| -> hybzono::Result<()> {
        events += 1;
        let n = ev.before.dim();
        for _ in 0..50 {
            let l = random_direction(&mut g, n);
            let a = optq::support(ev.before, &l)?.value;
            let b = optq::support(ev.after, &l)?.value;
            worst = worst.max((a - b).abs());
        }
        if ev.kind == ReductionKind::Binaries {
            if let (Some(tb), Some(ta)) = (ev.tree_before, ev.tree_after) {
                if tb.len() != ta.len() {
                    tree_changes += 1;
                }
            }
        }
        Ok(())
    };
    let (m, d) = build_pwa_two_mode().map_err(err)?;
    reach_observed(&pwa_initial_set(), &m, &d.u, &d.w, &ReachOptions::reduced(15), &mut observe).map_err(err)?;
    let (m, d) = build_heated_rooms(1).map_err(err)?;
    let r0 = heated_rooms_initial_set(1).map_err(err)?;
    reach_observed(&r0, &m, &d.u, &d.w, &ReachOptions::reduced(100), &mut observe).map_err(err)?;
    let msg = format!("{events} reductions, max support gap {worst:.2e}, {tree_changes} tree size changes");
    ensure(worst <= 1e-8 && tree_changes == 0, || msg.clone())?;
    Ok(msg)
}

fn translates(a: &PolygonSample, b: &PolygonSample, tol: f64) -> bool {
    let centroid = |v: &[[f64; 2]]| {
        let n = v.len() as f64;
        [v.iter().map(|p| p[0]).sum::<f64>() / n, v.iter().map(|p| p[1]).sum::<f64>() / n]
    };
    let (ca, cb) = (centroid(&a.vertices), centroid(&b.vertices));
    a.vertices.len() == b.vertices.len()
        && a.vertices.iter().all(|p| {
            b.vertices
                .iter()
                .any(|q| ((p[0] - ca[0]) - (q[0] - cb[0])).abs() <= tol && ((p[1] - ca[1]) - (q[1] - cb[1])).abs() <= tol)
        })
}

fn c10() -> Check {
    let z1 = example_zh1();
    let z2 = example_zh2();
    let t1 = optq::enumerate_integer_feasible(&z1).map_err(err)?;
    let t2 = optq::enumerate_integer_feasible(&z2).map_err(err)?;
    for (z, t) in [(&z1, &t1), (&z2, &t2)] {
        for cz in z.decompose(t).map_err(err)? {
            ensure(!optq::is_empty(&cz.into()).map_err(err)?, || "empty leaf in decomposition".into())?;
        }
    }
    let polys = project_sample(&z1, (0, 1), 250, true, None).map_err(err)?;
    let all_translates = polys.iter().all(|p| polys.iter().all(|q| translates(p, q, 1e-9)));
    let msg = format!("{} and {} leaves, {} polygons", t1.len(), t2.len(), polys.len());
    ensure(t1.len() == 8 && t2.len() == 7 && polys.len() == 8 && all_translates, || msg.clone())?;
    Ok(format!("{msg}, pairwise translates"))
}

fn main() {
    let start = Instant::now();
    let mut tracked = ReachOptions::new(15);
    tracked.track_tree = true;
    let runs = (|| -> hybzono::Result<Runs> {
        Ok(Runs {
            pwa_plain: pwa(&tracked)?,
            pwa_reduced: pwa(&ReachOptions::reduced(15))?,
            rooms_plain: rooms(&ReachOptions::new(100))?,
            rooms_reduced: rooms(&ReachOptions::reduced(100))?,
        })
    })();
    let runs = match runs {
        Ok(r) => r,
        Err(e) => {
            println!("FAIL setup: {e}");
            std::process::exit(1);
        }
    };
    println!("setup runs finished in {:.1} s", start.elapsed().as_secs_f64());

    let checks: [(&str, &dyn Fn() -> Check); 10] = [
        ("1 PWA dimensions", &|| c1(&runs)),
        ("2 PWA reduction", &|| c2(&runs)),
        ("3 PWA branching step", &|| c3(&runs)),
        ("4 heated rooms p=1", &|| c4(&runs)),
        ("5 growth formula", &|| c5(&runs)),
        ("6 oracle equivalence", &c6),
        ("7 support identities", &c7),
        ("8 trajectory and preimage sampling", &|| c8(&runs)),
        ("9 reductions preserve sets", &c9),
        ("10 example sets", &c10),
    ];
    // Optional arguments pick criteria by number; by default all run.
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, check)) in checks.into_iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        match check() {
            Ok(msg) => println!("PASS {name}: {msg} ({:.1} s)", t.elapsed().as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg} ({:.1} s)", t.elapsed().as_secs_f64());
            }
        }
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
