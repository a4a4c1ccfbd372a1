//! Simulation engine for thermal generation, protection, and collisional
//! harvesting of quantum coherence in clusters of dipole-coupled two-level
//! atoms damped and driven by a thermal photon bath.
//!
//! The crate is organized bottom-up:
//!
//! - [`qlinalg`] — operator algebra on multi-qubit Hilbert spaces: tensor
//!   products, site embeddings, partial trace, matrix exponentials, and
//!   validated density matrices.
//! - [`dipolar`] — the physical model: geometry-dependent dipole couplings,
//!   the exchange Hamiltonian, the collective thermal Lindbladian (dense and
//!   matrix-free), and the closed-form unitary pair map.
//! - [`dynamics`] — adaptive Runge–Kutta propagation of density matrices and
//!   steady-state extraction by null space or long-time integration.
//! - [`coherence`] — the l1 coherence measure, the analytic two-atom
//!   coherence law, excitation-block decomposition, and cubic trend fits.
//! - [`harvesting`] — a repeated-collision model in which a beam of atomic
//!   pairs thermalizes a single work qubit: derived rates, coarse-grained
//!   master equation, Bloch dynamics, effective temperature, heat current and
//!   power, plus a Monte-Carlo collision oracle.
//!
//! Units: ħ = 1 and the single-atom emission rate γ₀ = 1 unless stated
//! otherwise, so time is measured in 1/γ₀. The computational basis orders
//! atom 1 as the most significant bit with bit 0 = excited |e⟩ and bit 1 =
//! ground |g⟩; index 0 is |e…e⟩ and index 2ᴺ−1 is |g…g⟩.

pub mod coherence;
pub mod dipolar;
pub mod dynamics;
pub mod harvesting;
pub mod qlinalg;

pub use qlinalg::{C64, DensityMatrix};
