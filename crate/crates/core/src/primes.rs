//! Prime table: sieve generation, file ingestion, 1-based lookup and exact
//! prime counting.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Odd-only bit sieve of Eratosthenes. Bit `k` stands for `2k + 1`.
struct OddSieve {
    composite: Vec<u64>,
    limit: u64,
}

impl OddSieve {
    fn new(limit: u64) -> Self {
        let bits = (limit / 2 + 1) as usize;
        let mut composite = vec![0u64; bits.div_ceil(64)];
        // 1 is not prime
        composite[0] |= 1;
        let mut p = 3u64;
        while p * p <= limit {
            if composite[(p / 2) as usize / 64] >> ((p / 2) % 64) & 1 == 0 {
                let mut m = p * p;
                while m <= limit {
                    let k = (m / 2) as usize;
                    composite[k / 64] |= 1 << (k % 64);
                    m += 2 * p;
                }
            }
            p += 2;
        }
        Self { composite, limit }
    }

    fn is_prime(&self, n: u64) -> bool {
        debug_assert!(n <= self.limit);
        match n {
            0 | 1 => false,
            2 => true,
            n if n % 2 == 0 => false,
            n => {
                let k = (n / 2) as usize;
                self.composite[k / 64] >> (k % 64) & 1 == 0
            }
        }
    }

    fn primes(&self) -> Vec<u64> {
        let mut out = Vec::new();
        if self.limit >= 2 {
            out.push(2);
        }
        let mut n = 3;
        while n <= self.limit {
            if self.is_prime(n) {
                out.push(n);
            }
            n += 2;
        }
        out
    }
}

/// The primes `p(1) = 2, p(2) = 3, ...` up to `limit`, complete and in order.
///
/// All public indices are 1-based. The table is immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeTable {
    primes: Vec<u64>,
    limit: u64,
}

impl PrimeTable {
    /// All primes `<= limit`.
    pub fn sieve(limit: u64) -> Result<Self> {
        if limit < 2 {
            return Err(Error::domain(format!("sieve limit must be >= 2, got {limit}")));
        }
        let primes = OddSieve::new(limit).primes();
        Ok(Self { primes, limit })
    }

    /// Reads a whitespace separated list of primes. Lines whose first
    /// non-blank character is `#` are comments.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for line in text.lines() {
            if line.trim_start().starts_with('#') {
                continue;
            }
            for tok in line.split_whitespace() {
                let v: u64 = tok.parse().map_err(|_| Error::Parse(tok.to_string()))?;
                if v == 0 {
                    return Err(Error::Parse(tok.to_string()));
                }
                values.push(v);
            }
        }
        Self::from_primes(values)
    }

    /// Validates a list claimed to hold every prime up to its last entry.
    pub fn from_primes(values: Vec<u64>) -> Result<Self> {
        let Some(&max) = values.last() else {
            return Err(Error::domain("empty prime list"));
        };
        for w in values.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::NonMonotone(w[1]));
            }
        }
        let sieve = OddSieve::new(max.max(2));
        let mut expected = 2u64;
        for &v in &values {
            if !sieve.is_prime(v) {
                return Err(Error::Composite(v));
            }
            if v != expected {
                return Err(Error::Missing(expected));
            }
            expected = next_prime_after(&sieve, v);
        }
        Ok(Self { primes: values, limit: max })
    }

    /// Table holding only the first `n` primes.
    pub fn first(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.primes.len() {
            return Err(Error::IndexOutOfRange { index: n, lo: 1, hi: self.primes.len() });
        }
        let primes = self.primes[..n].to_vec();
        let limit = primes[n - 1];
        Ok(Self { primes, limit })
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Largest integer known to be covered (sieve limit or last entry read).
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.primes
    }

    /// `p(i)` for `1 <= i <= len`.
    pub fn prime_at(&self, i: usize) -> Result<u64> {
        if i == 0 || i > self.primes.len() {
            return Err(Error::IndexOutOfRange { index: i, lo: 1, hi: self.primes.len() });
        }
        Ok(self.primes[i - 1])
    }

    /// Unchecked `p(i)`; callers guarantee the index range.
    #[inline]
    pub(crate) fn p(&self, i: usize) -> u64 {
        self.primes[i - 1]
    }

    /// Exact `pi(x)`, the number of primes `<= x`.
    pub fn count_upto<T: Real>(&self, x: T) -> Result<usize> {
        let limit = T::int(self.limit);
        if !(x <= limit) {
            return Err(Error::OutOfRange { x: x.as_f64(), lo: 0.0, hi: self.limit as f64 });
        }
        if x < T::int(2) {
            return Ok(0);
        }
        let floor = x.floor().to_u64().expect("finite, non-negative");
        Ok(self.primes.partition_point(|&p| p <= floor))
    }

    /// 1-based index of `p` if it is a prime of the table.
    pub fn index_of(&self, p: u64) -> Option<usize> {
        self.primes.binary_search(&p).ok().map(|k| k + 1)
    }

    /// Primality for `n <= limit`, `None` beyond the table.
    pub fn is_prime(&self, n: u64) -> Option<bool> {
        (n <= self.limit).then(|| self.primes.binary_search(&n).is_ok())
    }

    /// Writes the table as ten whitespace separated columns per line.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for chunk in self.primes.chunks(10) {
            let line: Vec<String> = chunk.iter().map(u64::to_string).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

fn next_prime_after(sieve: &OddSieve, p: u64) -> u64 {
    let mut n = p + 1;
    while n <= sieve.limit && !sieve.is_prime(n) {
        n += 1;
    }
    n
}

/// Trial division; used where no table covers `n`.
pub fn is_prime_trial(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sieves() {
        assert_eq!(PrimeTable::sieve(10).unwrap().as_slice(), &[2, 3, 5, 7]);
        assert_eq!(PrimeTable::sieve(2).unwrap().as_slice(), &[2]);
        let t = PrimeTable::sieve(100).unwrap();
        assert_eq!(t.len(), 25);
        assert_eq!(t.prime_at(25).unwrap(), 97);
        assert!(matches!(PrimeTable::sieve(1), Err(Error::Domain(_))));
    }

    #[test]
    fn sieve_matches_trial_division() {
        let t = PrimeTable::sieve(5000).unwrap();
        let brute: Vec<u64> = (0..=5000).filter(|&n| is_prime_trial(n)).collect();
        assert_eq!(t.as_slice(), brute.as_slice());
    }

    #[test]
    fn lookup_and_count() {
        let t = PrimeTable::sieve(100).unwrap();
        assert_eq!(t.prime_at(1).unwrap(), 2);
        assert_eq!(t.prime_at(5).unwrap(), 11);
        assert!(t.prime_at(0).is_err());
        assert!(t.prime_at(26).is_err());
        assert_eq!(t.count_upto(10.0).unwrap(), 4);
        assert_eq!(t.count_upto(2.0).unwrap(), 1);
        assert_eq!(t.count_upto(96.9).unwrap(), 24);
        assert_eq!(t.count_upto(1.5).unwrap(), 0);
        assert!(t.count_upto(100.5).is_err());
    }

    #[test]
    fn parse_errors_name_the_value() {
        assert_eq!(PrimeTable::parse("2 3 5 7").unwrap().len(), 4);
        assert!(matches!(PrimeTable::parse("2 3 4"), Err(Error::Composite(4))));
        assert!(matches!(PrimeTable::parse("2 5"), Err(Error::Missing(3))));
        assert!(matches!(PrimeTable::parse("2 5 3"), Err(Error::NonMonotone(3))));
        assert!(matches!(PrimeTable::parse("3 5"), Err(Error::Missing(2))));
        assert!(matches!(PrimeTable::parse("2 x"), Err(Error::Parse(_))));
    }

    #[test]
    fn comments_and_layout() {
        let text = "# six columns\n2 3 5 7 11 13\n  # indented comment\n17\t19\n\n23 29";
        let t = PrimeTable::parse(text).unwrap();
        assert_eq!(t, PrimeTable::sieve(29).unwrap());
    }

    #[test]
    fn write_then_parse() {
        let t = PrimeTable::sieve(1000).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let back = PrimeTable::parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.as_slice(), t.as_slice());
    }

    #[test]
    fn first_n() {
        let t = PrimeTable::sieve(1000).unwrap().first(10).unwrap();
        assert_eq!(t.len(), 10);
        assert_eq!(t.limit(), 29);
    }

    #[test]
    fn gaps() {
        let t = PrimeTable::sieve(100_000).unwrap();
        for (k, w) in t.as_slice().windows(2).enumerate() {
            let gap = w[1] - w[0];
            assert!(gap >= 1);
            assert_eq!(gap == 1, k == 0);
        }
    }
}
