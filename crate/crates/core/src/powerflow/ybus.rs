use num_complex::Complex;

use super::PowerFlowError;
use crate::caseio::NetworkCase;
use crate::scalar::Scalar;

/// Dense complex bus admittance matrix in internal (dense) bus order, p.u.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix<T> {
    n: usize,
    entries: Vec<Complex<T>>,
}

impl<T: Scalar> AdmittanceMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![Complex::new(T::zero(), T::zero()); n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, y: Complex<T>) {
        self.entries[i * self.n + j] += y;
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// `Y V`, the bus current injections.
    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (y, v)| acc + y * v)
            })
            .collect()
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| (self.get(i, j) - self.get(j, i)).norm() <= tol))
    }
}

/// Two-port admittances of one in-service branch (pi model with ideal transformer on the from side).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchAdmittance<T> {
    /// Position in `case.branches`.
    pub branch: usize,
    pub from: usize,
    pub to: usize,
    pub yff: Complex<T>,
    pub yft: Complex<T>,
    pub ytf: Complex<T>,
    pub ytt: Complex<T>,
}

/// Per-branch admittance blocks for every in-service branch, in file order.
pub fn branch_admittances<T: Scalar>(
    case: &NetworkCase,
) -> Result<Vec<BranchAdmittance<T>>, PowerFlowError<T>> {
    let index = case.bus_index();
    let mut out = Vec::with_capacity(case.branches.len());
    for (k, br) in case.branches.iter().enumerate() {
        if !br.status {
            continue;
        }
        if br.x == 0.0 {
            return Err(PowerFlowError::ZeroImpedanceBranch {
                branch: k + 1,
                from: br.from_bus,
                to: br.to_bus,
            });
        }
        let from = *index
            .get(&br.from_bus)
            .ok_or(PowerFlowError::UnknownBus(br.from_bus))?;
        let to = *index
            .get(&br.to_bus)
            .ok_or(PowerFlowError::UnknownBus(br.to_bus))?;

        let one = Complex::new(T::one(), T::zero());
        let ys = one / Complex::new(T::lit(br.r), T::lit(br.x));
        let half_b = Complex::new(T::zero(), T::lit(br.b) / T::lit(2.0));
        let ratio = Complex::from_polar(T::lit(br.tap), T::lit(br.shift.to_radians()));
        let ytt = ys + half_b;
        out.push(BranchAdmittance {
            branch: k,
            from,
            to,
            yff: ytt / (ratio * ratio.conj()),
            yft: -ys / ratio.conj(),
            ytf: -ys / ratio,
            ytt,
        });
    }
    Ok(out)
}

/// Builds the bus admittance matrix from in-service branches and bus shunts.
pub fn build_ybus<T: Scalar>(case: &NetworkCase) -> Result<AdmittanceMatrix<T>, PowerFlowError<T>> {
    let n = case.buses.len();
    let mut y = AdmittanceMatrix::zeros(n);
    for br in branch_admittances::<T>(case)? {
        y.add(br.from, br.from, br.yff);
        y.add(br.from, br.to, br.yft);
        y.add(br.to, br.from, br.ytf);
        y.add(br.to, br.to, br.ytt);
    }
    let base = T::lit(case.base_mva);
    for (i, bus) in case.buses.iter().enumerate() {
        y.add(i, i, Complex::new(T::lit(bus.gs) / base, T::lit(bus.bs) / base));
    }
    Ok(y)
}
