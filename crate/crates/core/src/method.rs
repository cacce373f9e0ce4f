use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::geometry::{NodeClass, StencilFamily};

/// The three discretizations.
///
/// * `M1`: star interior stencil, every ghost stencil with steps (1, 1).
/// * `M2`: star interior stencil, second-layer ghosts use steps (2, 2).
/// * `M3`: compact box (Mehrstellen) interior stencil, steps (1, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    M1,
    M2,
    M3,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::M1, Method::M2, Method::M3];

    pub fn family(self) -> StencilFamily {
        match self {
            Method::M1 | Method::M2 => StencilFamily::Star,
            Method::M3 => StencilFamily::Box,
        }
    }

    /// Upwind stencil steps `(r_x, r_y)` for a ghost of the given layer.
    pub fn steps(self, class: NodeClass) -> (usize, usize) {
        match (self, class) {
            (Method::M2, NodeClass::GhostStar2) => (2, 2),
            _ => (1, 1),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::M1 => "M1",
            Method::M2 => "M2",
            Method::M3 => "M3",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "M1" | "1" | "METHOD1" => Ok(Method::M1),
            "M2" | "2" | "METHOD2" => Ok(Method::M2),
            "M3" | "3" | "METHOD3" => Ok(Method::M3),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_per_method() {
        assert_eq!(Method::M2.steps(NodeClass::GhostStar2), (2, 2));
        assert_eq!(Method::M2.steps(NodeClass::GhostStar1), (1, 1));
        assert_eq!(Method::M1.steps(NodeClass::GhostStar2), (1, 1));
        assert_eq!(Method::M3.steps(NodeClass::GhostBox), (1, 1));
    }

    #[test]
    fn parse_roundtrip() {
        for m in Method::ALL {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("M4".parse::<Method>().is_err());
    }
}
