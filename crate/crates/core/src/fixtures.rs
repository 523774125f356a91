//! The shipped fixture systems, built through the same generators as `cosm generate`.

use crate::system::{generate_builtin, BuiltinFamily, GenerateParams};
use crate::System;

fn named(family: BuiltinFamily) -> System {
    generate_builtin(family, &GenerateParams::default()).expect("builtin fixture is valid")
}

pub fn toy1() -> System {
    named(BuiltinFamily::Toy1)
}

pub fn toy2() -> System {
    named(BuiltinFamily::Toy2)
}

pub fn str1() -> System {
    named(BuiltinFamily::Str1)
}

pub fn filtration() -> System {
    named(BuiltinFamily::Filtration)
}

pub fn single_reaction() -> System {
    named(BuiltinFamily::SingleReaction)
}

pub fn string_concat() -> System {
    named(BuiltinFamily::StringConcat)
}

pub fn gamma_system() -> System {
    named(BuiltinFamily::GammaSystem)
}

/// Concatenation with per-reaction jitter in `[0, 1/4]` (seed 0).
pub fn perturbed_concat() -> System {
    let p = GenerateParams { amplitude: crate::Rational::new(1.into(), 4.into()), ..GenerateParams::default() };
    generate_builtin(BuiltinFamily::PerturbedConcat, &p).expect("builtin fixture is valid")
}

/// Every shipped fixture with its file stem.
pub fn all() -> Vec<(&'static str, System)> {
    vec![
        ("toy1", toy1()),
        ("toy2", toy2()),
        ("str1", str1()),
        ("filtration", filtration()),
        ("single-reaction", single_reaction()),
        ("string-concat", string_concat()),
        ("perturbed-concat", perturbed_concat()),
        ("gamma-system", gamma_system()),
    ]
}
