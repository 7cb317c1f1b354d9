//! Atomic symbol kinds: independent variables, dependent variables, jet
//! variables, and the opaque ansatz functions used by determining-system
//! generation.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Independent variables. `X`, `Y`, `T` are the base coordinates; `Mu`, `Nu`
/// are the reduced (group-invariant) coordinates.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Var {
    X,
    Y,
    T,
    Mu,
    Nu,
}

pub const ALL_VARS: [Var; 5] = [Var::X, Var::Y, Var::T, Var::Mu, Var::Nu];

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::T => "t",
            Var::Mu => "mu",
            Var::Nu => "nu",
        }
    }

    pub fn from_name(s: &str) -> Option<Var> {
        match s {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "t" => Some(Var::T),
            "mu" | "μ" => Some(Var::Mu),
            "nu" | "ν" => Some(Var::Nu),
            _ => None,
        }
    }

    fn slot(self) -> usize {
        match self {
            Var::X => 0,
            Var::Y => 1,
            Var::T => 2,
            Var::Mu => 3,
            Var::Nu => 4,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Dependent variables: the density kernel, the adjoint variable, the
/// reduced unknown, and the generic-solution symbol.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Dep {
    Rho,
    Theta,
    Phi,
    Sigma,
}

impl Dep {
    pub fn name(self) -> &'static str {
        match self {
            Dep::Rho => "rho",
            Dep::Theta => "theta",
            Dep::Phi => "Phi",
            Dep::Sigma => "Sigma",
        }
    }

    pub fn from_name(s: &str) -> Option<Dep> {
        match s {
            "rho" | "ρ" => Some(Dep::Rho),
            "theta" | "ϑ" => Some(Dep::Theta),
            "Phi" | "Φ" => Some(Dep::Phi),
            "Sigma" | "Σ" => Some(Dep::Sigma),
            _ => None,
        }
    }
}

impl fmt::Display for Dep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Maximum admissible total derivative order for jet variables.
pub const MAX_JET_ORDER: u32 = 4;

/// A sorted derivative multi-index over the independent variables.
/// Order-insensitive by construction (counts per variable).
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default, Serialize, Deserialize,
)]
pub struct JetIndex {
    counts: [u8; 5],
}

impl JetIndex {
    pub fn empty() -> Self {
        JetIndex::default()
    }

    pub fn of(vars: &[Var]) -> Self {
        let mut ix = JetIndex::default();
        for &v in vars {
            ix.counts[v.slot()] += 1;
        }
        ix
    }

    pub fn order(&self) -> u32 {
        self.counts.iter().map(|&c| c as u32).sum()
    }

    pub fn count(&self, v: Var) -> u8 {
        self.counts[v.slot()]
    }

    /// Index with one extra derivative in `v`; `None` past [`MAX_JET_ORDER`].
    pub fn raised(&self, v: Var) -> Option<JetIndex> {
        if self.order() >= MAX_JET_ORDER {
            return None;
        }
        let mut ix = *self;
        ix.counts[v.slot()] += 1;
        Some(ix)
    }

    /// Index with one derivative in `v` removed; `None` if absent.
    pub fn lowered(&self, v: Var) -> Option<JetIndex> {
        if self.counts[v.slot()] == 0 {
            return None;
        }
        let mut ix = *self;
        ix.counts[v.slot()] -= 1;
        Some(ix)
    }

    /// Variables of the index, with multiplicity, in canonical order.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for v in ALL_VARS {
            for _ in 0..self.counts[v.slot()] {
                out.push(v);
            }
        }
        out
    }
}

/// A jet variable: a formal symbol for one partial derivative of a dependent
/// variable, treated as an independent coordinate. Order 0 is the dependent
/// variable itself.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct JetVar {
    pub dep: Dep,
    pub index: JetIndex,
}

impl JetVar {
    pub fn new(dep: Dep, vars: &[Var]) -> Self {
        JetVar {
            dep,
            index: JetIndex::of(vars),
        }
    }

    pub fn order(&self) -> u32 {
        self.index.order()
    }
}

impl fmt::Display for JetVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.index.order() == 0 {
            return write!(f, "{}", self.dep);
        }
        let names: Vec<&str> = self.index.vars().iter().map(|v| v.name()).collect();
        write!(f, "{}[{}]", self.dep, names.join(","))
    }
}

/// The four unknown symmetry-ansatz coefficient functions, each an opaque
/// function of (x, y, t, rho).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum AnsatzFn {
    XiX,
    XiY,
    XiT,
    Eta,
}

pub const ALL_ANSATZ: [AnsatzFn; 4] = [AnsatzFn::XiX, AnsatzFn::XiY, AnsatzFn::XiT, AnsatzFn::Eta];

impl AnsatzFn {
    pub fn name(self) -> &'static str {
        match self {
            AnsatzFn::XiX => "xi_x",
            AnsatzFn::XiY => "xi_y",
            AnsatzFn::XiT => "xi_t",
            AnsatzFn::Eta => "eta",
        }
    }

    pub fn from_name(s: &str) -> Option<AnsatzFn> {
        match s {
            "xi_x" => Some(AnsatzFn::XiX),
            "xi_y" => Some(AnsatzFn::XiY),
            "xi_t" => Some(AnsatzFn::XiT),
            "eta" => Some(AnsatzFn::Eta),
            _ => None,
        }
    }
}

impl fmt::Display for AnsatzFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Partial-derivative multi-index of an ansatz function over (x, y, t, rho).
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default, Serialize, Deserialize,
)]
pub struct AnsatzIndex {
    /// counts over (x, y, t, rho)
    counts: [u8; 4],
}

/// Axis selector for [`AnsatzIndex`]: a base variable or the dependent slot.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AnsatzAxis {
    Base(Var),
    Rho,
}

impl AnsatzIndex {
    pub fn empty() -> Self {
        AnsatzIndex::default()
    }

    fn slot(axis: AnsatzAxis) -> Option<usize> {
        match axis {
            AnsatzAxis::Base(Var::X) => Some(0),
            AnsatzAxis::Base(Var::Y) => Some(1),
            AnsatzAxis::Base(Var::T) => Some(2),
            AnsatzAxis::Base(_) => None,
            AnsatzAxis::Rho => Some(3),
        }
    }

    pub fn order(&self) -> u32 {
        self.counts.iter().map(|&c| c as u32).sum()
    }

    pub fn raised(&self, axis: AnsatzAxis) -> Option<AnsatzIndex> {
        let slot = Self::slot(axis)?;
        if self.order() >= MAX_JET_ORDER {
            return None;
        }
        let mut ix = *self;
        ix.counts[slot] += 1;
        Some(ix)
    }

    pub fn axis_names(&self) -> Vec<&'static str> {
        let names = ["x", "y", "t", "rho"];
        let mut out = Vec::new();
        for (slot, &name) in names.iter().enumerate() {
            for _ in 0..self.counts[slot] {
                out.push(name);
            }
        }
        out
    }

    pub fn of_names(names: &[&str]) -> Option<AnsatzIndex> {
        let mut ix = AnsatzIndex::default();
        for n in names {
            let axis = match *n {
                "x" => AnsatzAxis::Base(Var::X),
                "y" => AnsatzAxis::Base(Var::Y),
                "t" => AnsatzAxis::Base(Var::T),
                "rho" | "ρ" => AnsatzAxis::Rho,
                _ => return None,
            };
            ix = ix.raised(axis)?;
        }
        Some(ix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_index_is_order_insensitive() {
        let a = JetIndex::of(&[Var::X, Var::Y]);
        let b = JetIndex::of(&[Var::Y, Var::X]);
        assert_eq!(a, b);
        assert_eq!(a.order(), 2);
    }

    #[test]
    fn jet_index_caps_at_max_order() {
        let ix = JetIndex::of(&[Var::X, Var::X, Var::Y, Var::T]);
        assert_eq!(ix.order(), 4);
        assert!(ix.raised(Var::X).is_none());
    }

    #[test]
    fn jet_display_names() {
        assert_eq!(JetVar::new(Dep::Rho, &[]).to_string(), "rho");
        assert_eq!(
            JetVar::new(Dep::Rho, &[Var::Y, Var::X]).to_string(),
            "rho[x,y]"
        );
        assert_eq!(
            JetVar::new(Dep::Phi, &[Var::Mu, Var::Mu]).to_string(),
            "Phi[mu,mu]"
        );
    }
}
