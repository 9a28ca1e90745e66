//! Gaussian probe states, channel patterns and error-probability bounds for
//! idler-free multi-channel discrimination.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure function
//! of value types; IO, configuration and the command-line front end live in the
//! `multiprobe` companion crate.
//!
//! Conventions used throughout:
//!
//! * quadratures are ordered `(x1, p1, x2, p2, ...)`,
//! * vacuum shot noise is `1/2`, so a vacuum covariance matrix is `I/2`,
//! * the fidelity is the root fidelity `Tr sqrt(sqrt(rho) sigma sqrt(rho))`,
//! * pattern bit `1` is a target channel, bit `0` a background channel.
//!
//! ```
//! use multiprobe_core::prelude::*;
//!
//! let family = ChannelFamily::pure_loss(0.99, 0.97).unwrap();
//! let space = ImageSpace::cpf(4, 1).unwrap();
//! let probe = ProbeSpec::disjoint("12|34".parse().unwrap(), 20.5);
//! let report = bounds_via_counting(&space, &probe, &family, 10.0).unwrap();
//! assert!(report.lower <= report.upper);
//! ```
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bounds;
pub mod channels;
pub mod combinatorics;
mod eigen;
mod error;
pub mod gaussian;
pub mod imagespace;
pub mod probes;

pub use error::{Error, Result};

/// The commonly used types and operations.
pub mod prelude {
    pub use crate::bounds::{
        bounds_auto, bounds_brute_force, bounds_d2, bounds_d2_odd, bounds_generic, bounds_mutual, bounds_via_counting,
        classical_benchmark, copies_for_mbar, guaranteed_advantage, subfidelity_closed_form, subfidelity_numeric,
        BoundReport, Energy, FidelityTable, Method, SubFidelityClass,
    };
    pub use crate::channels::{
        apply_pattern, apply_pattern_in_frame, apply_pattern_with_idlers, pattern_scaling, ChannelFamily, ChannelKind,
        GpiParams, IdlerLayout, Pattern,
    };
    pub use crate::gaussian::{
        collective_modes, fidelity_dense, gaussian_fidelity, ghz_cm, ghz_cm_collective, symplectic_spectrum, tmsv_cm,
        CovMatrix, SymplecticSpectrum,
    };
    pub use crate::imagespace::{hamming, ExtendedImageSpace, ImageSpace, SpaceKind};
    pub use crate::probes::{
        all_pairs_partition, assemble_probe, average_channel_use, decompose_rounds, extend_for_mutual_probing,
        nn_partition, odd_m_disjoint_spec, tmsv_disjoint_partition, ChannelCover, ClassicalState, DisjointPartition,
        IdlerPartition, NonDisjointPartition, OddStrategy, Probe, ProbeSpec,
    };
    pub use crate::{Error, Result};
}
