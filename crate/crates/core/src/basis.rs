//! Occupation-number basis shared by every module.
//!
//! A configuration of `n` sites is an integer whose binary digits, read from
//! the most significant end, are the occupations of sites `1..=n`. Site `j`
//! (1-based) therefore sits in bit `n - j`; the state `|1100>` has index 12.

/// Largest chain length for which configurations fit comfortably in a `usize`.
pub const MAX_SITES: usize = 30;

/// Bit mask for site `site` (1-based) of an `n_sites` chain.
#[inline]
pub fn site_mask(n_sites: usize, site: usize) -> usize {
    debug_assert!(site >= 1 && site <= n_sites);
    1usize << (n_sites - site)
}

#[inline]
pub fn is_occupied(config: usize, n_sites: usize, site: usize) -> bool {
    config & site_mask(n_sites, site) != 0
}

#[inline]
pub fn particle_count(config: usize) -> usize {
    config.count_ones() as usize
}

/// Configuration index from a list of occupations of sites 1..=n.
pub fn config_from_occupations(occ: &[bool]) -> usize {
    occ.iter().fold(0usize, |acc, &o| (acc << 1) | o as usize)
}

pub fn occupations(config: usize, n_sites: usize) -> Vec<bool> {
    (1..=n_sites).map(|j| is_occupied(config, n_sites, j)).collect()
}

/// Domain configuration with `n` particles packed against site 1.
pub fn left_domain(n_sites: usize, n: usize) -> usize {
    assert!(n <= n_sites);
    ((1usize << n) - 1) << (n_sites - n)
}

/// Binomial coefficient as f64-exact integer arithmetic for small arguments.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Configurations grouped by particle number, each group in ascending order.
#[derive(Clone, Debug)]
pub struct NumberSectors {
    n_sites: usize,
    sectors: Vec<Vec<usize>>,
    position: Vec<usize>,
}

impl NumberSectors {
    pub fn new(n_sites: usize) -> Self {
        assert!(n_sites <= MAX_SITES);
        let dim = 1usize << n_sites;
        let mut sectors = vec![Vec::new(); n_sites + 1];
        let mut position = vec![0; dim];
        for c in 0..dim {
            let n = particle_count(c);
            position[c] = sectors[n].len();
            sectors[n].push(c);
        }
        Self {
            n_sites,
            sectors,
            position,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn hilbert_dim(&self) -> usize {
        1 << self.n_sites
    }

    /// Configurations with exactly `n` particles.
    pub fn sector(&self, n: usize) -> &[usize] {
        &self.sectors[n]
    }

    /// Index of `config` inside its own sector.
    pub fn position(&self, config: usize) -> usize {
        self.position[config]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[usize])> {
        self.sectors.iter().enumerate().map(|(n, s)| (n, s.as_slice()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_one_is_most_significant() {
        assert_eq!(config_from_occupations(&[true, true, false, false]), 12);
        assert!(is_occupied(12, 4, 1));
        assert!(is_occupied(12, 4, 2));
        assert!(!is_occupied(12, 4, 3));
        assert_eq!(occupations(0b0101, 4), vec![false, true, false, true]);
    }

    #[test]
    fn domains_and_sectors() {
        assert_eq!(left_domain(6, 3), 0b111000);
        let s = NumberSectors::new(6);
        assert_eq!(s.sector(3).len(), binomial(6, 3));
        for (n, configs) in s.iter() {
            for (i, &c) in configs.iter().enumerate() {
                assert_eq!(particle_count(c), n);
                assert_eq!(s.position(c), i);
            }
        }
    }
}
