//! Instances shipped with the library, regenerated by
//! `scripts/gen_instances.py`.

use crate::instance::{Instance, InstanceError};

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        /// `(name, JSON source)` for every bundled instance.
        pub const BUNDLED: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../instances/", $name, ".json"))),)*
        ];
    };
}

bundled!(
    "identity2",
    "z2_worked",
    "skew3",
    "rot4",
    "s3_skew",
    "d4_skew",
    "s4_skew",
    "z3_complex",
    "z8_shift",
    "klein_weighted",
);

pub fn bundled(name: &str) -> Option<Result<Instance, InstanceError>> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, src)| Instance::parse(src, n, None))
}

pub fn all_bundled() -> Result<Vec<Instance>, InstanceError> {
    BUNDLED
        .iter()
        .map(|(n, src)| Instance::parse(src, n, None))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_instance_loads() {
        let all = all_bundled().unwrap();
        assert_eq!(all.len(), 10);
        for inst in &all {
            assert!(inst.space.len() <= 64 && inst.map.cols() <= 8 && inst.group.len() <= 24);
        }
    }
}
