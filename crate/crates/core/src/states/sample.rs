//! Seeded samplers for states that are network-realizable by construction.
//!
//! Every source emits one qubit per incident party ("slots"). A sample draws
//! a pure state per source, routes slots to parties, optionally scrambles
//! each party's block with a Haar unitary and an on-site depolarizing
//! channel, and always compresses each party to its first slot by tracing
//! the rest. All steps are local channels on the received subsystems, so
//! samples are network-realizable whatever the options.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{c, cr, ComplexMatrix, DensityMatrix, C64};
use crate::network::Network;
use crate::states::Decomposition;

const MAX_SLOTS: usize = 10;

#[derive(Clone, Debug)]
pub struct SampleOptions {
    /// Haar unitary on each party's received block before compression.
    pub local_channels: bool,
    /// Sources emit products of independent single-qubit pure states instead
    /// of entangled pure states; with channels off, compression then
    /// preserves purity exactly.
    pub product_sources: bool,
    /// Strength of a per-party depolarizing channel after compression,
    /// in [0, 1].
    pub depolarizing: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            local_channels: true,
            product_sources: false,
            depolarizing: 0.0,
        }
    }
}

/// A sampled network state plus the factors that went into it.
#[derive(Clone, Debug)]
pub struct IqnSample {
    pub state: DensityMatrix,
    pub seed: u64,
    pub slot_count: usize,
    pub purity: f64,
    pub rank: usize,
}

/// A sampled convex mixture with its explicit decomposition.
#[derive(Clone, Debug)]
pub struct CqnSample {
    pub state: DensityMatrix,
    pub decomposition: Decomposition,
    pub seed: u64,
}

pub fn sample_iqn_state(g: &Network, local_channels: bool, seed: u64) -> Result<IqnSample> {
    sample_iqn_state_with(
        g,
        &SampleOptions {
            local_channels,
            ..SampleOptions::default()
        },
        seed,
    )
}

pub fn sample_iqn_state_with(g: &Network, opts: &SampleOptions, seed: u64) -> Result<IqnSample> {
    if !(0.0..=1.0).contains(&opts.depolarizing) {
        return Err(Error::Invalid(format!(
            "depolarizing strength {} outside [0, 1]",
            opts.depolarizing
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.n_parties();

    // Slots sorted by (party, source): party-major, so each party owns a
    // contiguous run and slot 0 is the most significant tensor factor.
    let mut slots: Vec<(usize, usize)> = Vec::new();
    for (e, src) in g.sources().iter().enumerate() {
        for &p in src {
            slots.push((p, e));
        }
    }
    slots.sort_unstable();
    let s = slots.len();
    if s > MAX_SLOTS {
        return Err(Error::Invalid(format!(
            "slot space 2^{s} exceeds desk scale (max 2^{MAX_SLOTS})"
        )));
    }
    let mut source_pos: Vec<Vec<usize>> = vec![Vec::new(); g.n_sources()];
    for (pos, &(_, e)) in slots.iter().enumerate() {
        source_pos[e].push(pos);
    }

    let source_amps: Vec<Vec<C64>> = source_pos
        .iter()
        .map(|pos| {
            if opts.product_sources {
                let mut amps = vec![cr(1.0)];
                for _ in 0..pos.len() {
                    let q = haar_pure(2, &mut rng);
                    let mut next = Vec::with_capacity(amps.len() * 2);
                    for a in &amps {
                        next.push(a * q[0]);
                        next.push(a * q[1]);
                    }
                    amps = next;
                }
                amps
            } else {
                haar_pure(1 << pos.len(), &mut rng)
            }
        })
        .collect();

    let dim = 1usize << s;
    let mut psi = DMatrix::from_element(dim, 1, cr(0.0));
    for b in 0..dim {
        let mut a = cr(1.0);
        for (e, pos) in source_pos.iter().enumerate() {
            let k = pos.len();
            let mut idx = 0usize;
            for (t, &p) in pos.iter().enumerate() {
                let bit = (b >> (s - 1 - p)) & 1;
                idx |= bit << (k - 1 - t);
            }
            a *= source_amps[e][idx];
        }
        psi[(b, 0)] = a;
    }

    if opts.local_channels {
        let mut u = ComplexMatrix::identity(1);
        for i in 0..n {
            u = u.tensor(&haar_unitary(1 << g.degree(i), &mut rng));
        }
        psi = &u.0 * psi;
    }

    let rho_slots = DensityMatrix::trusted(
        vec![2; s],
        ComplexMatrix(&psi * psi.adjoint()),
    );
    let keep: Vec<usize> = (0..n)
        .map(|i| slots.iter().position(|&(p, _)| p == i).unwrap())
        .collect();
    let compressed = rho_slots.partial_trace(&keep)?;

    let mut mat = compressed.matrix().clone();
    if opts.depolarizing > 0.0 {
        let p = opts.depolarizing;
        let paulis = [
            ComplexMatrix::from_rows(&[vec![cr(0.0), cr(1.0)], vec![cr(1.0), cr(0.0)]])?,
            ComplexMatrix::from_rows(&[vec![cr(0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), cr(0.0)]])?,
            ComplexMatrix::from_rows(&[vec![cr(1.0), cr(0.0)], vec![cr(0.0), cr(-1.0)]])?,
        ];
        for i in 0..n {
            let mut next = mat.scale(cr(1.0 - 0.75 * p));
            for sigma in &paulis {
                let mut op = ComplexMatrix::identity(1);
                for j in 0..n {
                    let f = if j == i {
                        sigma.clone()
                    } else {
                        ComplexMatrix::identity(2)
                    };
                    op = op.tensor(&f);
                }
                let conj = &(&op * &mat) * &op;
                next = &next + &conj.scale(cr(0.25 * p));
            }
            mat = next;
        }
    }

    // Revalidate: catches any arithmetic drift in the channel pipeline.
    let state = DensityMatrix::new(vec![2; n], mat, 1e-7)?;
    let purity = state.purity();
    let rank = state.numerical_rank(1e-9);
    Ok(IqnSample {
        state,
        seed,
        slot_count: s,
        purity,
        rank,
    })
}

pub fn sample_cqn_state(g: &Network, n_components: usize, seed: u64) -> Result<CqnSample> {
    sample_cqn_state_with(g, n_components, &SampleOptions::default(), seed)
}

pub fn sample_cqn_state_with(
    g: &Network,
    n_components: usize,
    opts: &SampleOptions,
    seed: u64,
) -> Result<CqnSample> {
    if n_components == 0 {
        return Err(Error::Invalid("need at least one component".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sub_seeds: Vec<u64> = (0..n_components).map(|_| rng.gen()).collect();
    let weights = if n_components == 1 {
        vec![1.0]
    } else {
        let alpha = vec![1.0; n_components];
        let dir = Dirichlet::new(&alpha)
            .map_err(|e| Error::Invalid(format!("weight sampling: {e}")))?;
        dir.sample(&mut rng)
    };
    let components = sub_seeds
        .iter()
        .map(|&s| Ok(sample_iqn_state_with(g, opts, s)?.state))
        .collect::<Result<Vec<_>>>()?;
    let decomposition = Decomposition::new(weights, components)?;
    Ok(CqnSample {
        state: decomposition.mixture(),
        decomposition,
        seed,
    })
}

fn haar_pure(d: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..d)
            .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

fn haar_unitary(d: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = DMatrix::from_fn(d, d, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    // Fix column phases so the distribution is Haar, not QR-convention-biased.
    for j in 0..d {
        let rjj: C64 = r[(j, j)];
        let m = rjj.norm();
        let phase = if m > 1e-300 { rjj.conj() / m } else { cr(1.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn triangle_samples_compress_to_three_qubits() {
        let g = Network::triangle();
        for channels in [false, true] {
            let s = sample_iqn_state(&g, channels, 7).unwrap();
            assert_eq!(s.state.dims(), &[2, 2, 2]);
            assert_eq!(s.state.dim(), 8);
            assert_eq!(s.slot_count, 6);
            assert!(s.purity <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn product_sources_without_channels_stay_pure() {
        let g = Network::triangle();
        let opts = SampleOptions {
            local_channels: false,
            product_sources: true,
            depolarizing: 0.0,
        };
        let s = sample_iqn_state_with(&g, &opts, 11).unwrap();
        assert_abs_diff_eq!(s.purity, 1.0, epsilon = 1e-9);
        assert_eq!(s.rank, 1);
    }

    #[test]
    fn same_seed_reproduces_bitwise() {
        let g = Network::cycle(4).unwrap();
        let a = sample_iqn_state(&g, true, 42).unwrap();
        let b = sample_iqn_state(&g, true, 42).unwrap();
        for (x, y) in a.state.matrix().0.iter().zip(b.state.matrix().0.iter()) {
            assert!(x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits());
        }
        let other = sample_iqn_state(&g, true, 43).unwrap();
        let diff: f64 = a
            .state
            .matrix()
            .0
            .iter()
            .zip(other.state.matrix().0.iter())
            .map(|(x, y)| (x - y).norm())
            .sum();
        assert!(diff > 1e-6);
    }

    #[test]
    fn single_component_mixture_is_its_component() {
        let g = Network::triangle();
        let s = sample_cqn_state(&g, 1, 5).unwrap();
        assert_eq!(s.decomposition.len(), 1);
        assert_abs_diff_eq!(s.decomposition.weights()[0], 1.0, epsilon = 1e-15);
        let d = (&s.state.matrix().0 - &s.decomposition.components()[0].matrix().0)
            .iter()
            .map(|v| v.norm())
            .fold(0.0f64, f64::max);
        assert!(d < 1e-14);
    }

    #[test]
    fn mixture_purity_below_max_component_purity() {
        let g = Network::triangle();
        for seed in 0..5 {
            let s = sample_cqn_state(&g, 3, seed).unwrap();
            let max_tau = s
                .decomposition
                .components()
                .iter()
                .map(|c| c.purity())
                .fold(0.0f64, f64::max);
            assert!(s.state.purity() <= max_tau + 1e-10);
            let w: f64 = s.decomposition.weights().iter().sum();
            assert_abs_diff_eq!(w, 1.0, epsilon = 1e-9);
            assert!(s.decomposition.weights().iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn full_depolarizing_yields_white_noise() {
        let g = Network::triangle();
        let opts = SampleOptions {
            local_channels: true,
            product_sources: false,
            depolarizing: 1.0,
        };
        let s = sample_iqn_state_with(&g, &opts, 3).unwrap();
        assert_abs_diff_eq!(s.purity, 0.125, epsilon = 1e-10);
        for i in 0..8 {
            assert_abs_diff_eq!(s.state.matrix().get(i, i).re, 0.125, epsilon = 1e-10);
        }
    }

    #[test]
    fn oversized_networks_are_rejected() {
        let g = Network::cycle(6).unwrap(); // 12 slots
        assert!(sample_iqn_state(&g, true, 0).is_err());
        assert!(sample_cqn_state(&Network::triangle(), 0, 0).is_err());
    }
}
