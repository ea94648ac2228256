//! Equilibrium of the two-tube rod.
//!
//! On the overlap `[0, l1]` both tubes share a centerline. The inner tube's
//! frame is the outer frame twisted by `θ` about the common tangent, its
//! bending curvature equals the outer tube's, and its linear strain is the
//! outer strain scaled by the dilation ratio `β`. Interaction loads between
//! the tubes act only in the `d1, d2` directions, so equilibrium is imposed on
//! the sum of both tubes in `d1, d2` and on each tube separately along `d3`.
//! Substituting the tendon line loads and the linear constitutive law turns
//! these eight scalar equations into a linear system for
//! `[u̇1, v̇1, u̇_d3,2, β̇]`.
//!
//! Beyond `l1` only the inner robot remains and the classical single-rod
//! closure applies, with `θ` and `β` frozen at their `l1` values.

use crate::geometry::CrossSection;
use crate::rod::{rot_d3, skew, IntegrationError, E3};
use crate::tendon::{
    curvature_operator, distributed_wrench, tendon_path_derivatives, terminal_wrench,
    DistributedWrench, TendonRoute,
};
use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, SMatrix, SVector, Vector3, Vector6};

pub type Matrix8 = SMatrix<f64, 8, 8>;
pub type Vector8 = SVector<f64, 8>;

/// Row-equilibrated LHS matrices with a larger 1-norm condition number are
/// treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Projection onto the `d1, d2` plane.
fn planar() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0))
}

/// One robot's section together with the tendons it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct Tube {
    pub section: CrossSection,
    pub tendons: Vec<TendonRoute>,
}

impl Tube {
    /// Internal force `n = K_se (v - v*)` from the shear/extension offset `v - e3`.
    pub fn force(&self, v_offset: &Vector3<f64>) -> Vector3<f64> {
        self.section.k_se * v_offset
    }

    /// Internal moment `m = K_bt (u - u*)`, with `u* = 0`.
    pub fn moment(&self, u: &Vector3<f64>) -> Vector3<f64> {
        self.section.k_bt * u
    }

    fn loaded_tendons(&self) -> impl Iterator<Item = &TendonRoute> {
        self.tendons.iter().filter(|t| t.tension != 0.0)
    }

    /// Sum of the tendon line loads for given strains and strain rates.
    pub fn line_load(
        &self,
        u: &Vector3<f64>,
        v: &Vector3<f64>,
        u_dot: &Vector3<f64>,
        v_dot: &Vector3<f64>,
    ) -> Result<DistributedWrench, IntegrationError> {
        let mut total = DistributedWrench::zero();
        for t in self.loaded_tendons() {
            let (pd, pdd) = tendon_path_derivatives(u, v, u_dot, v_dot, &t.offset);
            total = total + distributed_wrench(t, &pd, &pdd).map_err(degenerate_path)?;
        }
        Ok(total)
    }

    /// Sum of the tendon anchor loads, assuming every tendon of this tube
    /// terminates at the same arc length.
    pub fn anchor_load(
        &self,
        u: &Vector3<f64>,
        v: &Vector3<f64>,
    ) -> Result<(Vector3<f64>, Vector3<f64>), IntegrationError> {
        let mut force = Vector3::zeros();
        let mut moment = Vector3::zeros();
        for t in self.loaded_tendons() {
            let pd = u.cross(&t.offset) + v;
            let (f, m) = terminal_wrench(t, &pd).map_err(degenerate_path)?;
            force += f;
            moment += m;
        }
        Ok((force, moment))
    }

    /// Affine map from `[u̇; v̇]` to the local equilibrium residual `[F; M]`,
    /// where `F = ṅ + [u] n + f` and `M = ṁ + [u] m + [v] n + τ`.
    fn wrench_map(
        &self,
        u: &Vector3<f64>,
        v: &Vector3<f64>,
        n: &Vector3<f64>,
        m: &Vector3<f64>,
    ) -> Result<(Matrix6<f64>, Vector6<f64>), IntegrationError> {
        let mut f_u = Matrix3::zeros();
        let mut f_v = self.section.k_se;
        let mut m_u = self.section.k_bt;
        let mut m_v = Matrix3::zeros();
        let mut b_f = u.cross(n);
        let mut b_m = u.cross(m) + v.cross(n);
        for t in self.loaded_tendons() {
            let lambda = t.tension;
            let pd = u.cross(&t.offset) + v;
            let op = curvature_operator(&pd).map_err(degenerate_path)? * lambda;
            let r = skew(&t.offset);
            let drift = op * u.cross(&pd);
            f_u += op * r;
            f_v -= op;
            m_u += r * op * r;
            m_v -= r * op;
            b_f -= drift;
            b_m -= r * drift;
        }
        let mut a = Matrix6::zeros();
        a.fixed_view_mut::<3, 3>(0, 0).copy_from(&f_u);
        a.fixed_view_mut::<3, 3>(0, 3).copy_from(&f_v);
        a.fixed_view_mut::<3, 3>(3, 0).copy_from(&m_u);
        a.fixed_view_mut::<3, 3>(3, 3).copy_from(&m_v);
        let mut b = Vector6::zeros();
        b.fixed_rows_mut::<3>(0).copy_from(&b_f);
        b.fixed_rows_mut::<3>(3).copy_from(&b_m);
        Ok((a, b))
    }
}

fn degenerate_path(e: crate::tendon::DegeneratePath) -> IntegrationError {
    IntegrationError::Degenerate {
        s: f64::NAN,
        reason: e.to_string(),
    }
}

fn at(s: f64, e: IntegrationError) -> IntegrationError {
    match e {
        IntegrationError::Degenerate { reason, .. } => IntegrationError::Degenerate { s, reason },
        other => other,
    }
}

/// Strain variables of the overlap segment. Linear strain and dilation are
/// stored as offsets from their unloaded values so that small elastic
/// deformations keep full relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapStrains {
    pub u1: Vector3<f64>,
    /// `v1 - e3`
    pub v1_offset: Vector3<f64>,
    /// Twist of the inner tube relative to the outer one.
    pub theta: f64,
    /// `u_d3` of the inner tube.
    pub u2_d3: f64,
    /// `β - 1`
    pub beta_offset: f64,
}

impl OverlapStrains {
    pub fn unloaded(theta: f64) -> Self {
        Self {
            u1: Vector3::zeros(),
            v1_offset: Vector3::zeros(),
            theta,
            u2_d3: 0.0,
            beta_offset: 0.0,
        }
    }

    pub fn v1(&self) -> Vector3<f64> {
        E3 + self.v1_offset
    }

    pub fn beta(&self) -> f64 {
        1.0 + self.beta_offset
    }

    pub fn theta_dot(&self) -> f64 {
        self.u2_d3 - self.u1.z
    }

    /// Inner-tube strains on the overlap.
    pub fn tube2(&self) -> (Vector3<f64>, Vector3<f64>) {
        let rt = rot_d3(self.theta).transpose();
        let mut u2 = rt * self.u1;
        u2.z = self.u2_d3;
        // β Rᵀ v1 - e3 = (β - 1) e3 + β Rᵀ (v1 - e3), using Rᵀ e3 = e3.
        let v2_offset = E3 * self.beta_offset + rt * self.v1_offset * self.beta();
        (u2, v2_offset)
    }
}

/// Derivative of the overlap strains: the solution of the 8×8 system plus
/// the reconstructed inner-tube quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledDerivative {
    pub u1_dot: Vector3<f64>,
    pub v1_dot: Vector3<f64>,
    pub u2_d3_dot: f64,
    pub beta_dot: f64,
    pub theta_dot: f64,
    pub u2_dot: Vector3<f64>,
    pub v2_dot: Vector3<f64>,
}

impl CoupledDerivative {
    pub fn unknowns(&self) -> Vector8 {
        let mut x = Vector8::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.u1_dot);
        x.fixed_rows_mut::<3>(3).copy_from(&self.v1_dot);
        x[6] = self.u2_d3_dot;
        x[7] = self.beta_dot;
        x
    }
}

/// Inner-tube strains and strain rates on the overlap:
/// `u2 = Rᵀ(θ) u1 + θ̇ e3`, `v2 = β Rᵀ(θ) v1` and their arc-length derivatives.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_tube2_strains(
    u1: &Vector3<f64>,
    v1: &Vector3<f64>,
    theta: f64,
    theta_dot: f64,
    beta: f64,
    beta_dot: f64,
    u1_dot: &Vector3<f64>,
    v1_dot: &Vector3<f64>,
    u2_d3_dot: f64,
) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let rt = rot_d3(theta).transpose();
    let e3t = skew(&E3).transpose();
    let u2 = rt * u1 + E3 * theta_dot;
    let v2 = rt * v1 * beta;
    let u2_dot = (rt - Matrix3::from_diagonal(&E3)) * u1_dot + e3t * rt * u1 * theta_dot + E3 * u2_d3_dot;
    let v2_dot = rt * v1 * beta_dot + e3t * rt * v1 * (beta * theta_dot) + rt * v1_dot * beta;
    (u2, v2, u2_dot, v2_dot)
}

/// Axial force and torque mismatch of the outer tube, then the force and
/// moment the inner tube carries just past the termination.
pub type OuterTermination = ([f64; 2], Vector3<f64>, Vector3<f64>);

/// The two tubes of the overlap segment.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapPair {
    pub outer: Tube,
    pub inner: Tube,
}

impl OverlapPair {
    /// Builds `LHS x = RHS` for `x = [u̇1; v̇1; u̇_d3,2; β̇]`.
    ///
    /// Rows: `d1, d2` of the summed moment balance, `d1, d2` of the summed
    /// force balance, `d3` moment of tube 1 and tube 2, `d3` force of tube 1
    /// and tube 2. Sums are taken in the outer tube's frame.
    pub fn assemble(&self, st: &OverlapStrains) -> Result<(Matrix8, Vector8), IntegrationError> {
        let rz = rot_d3(st.theta);
        let rt = rz.transpose();
        let beta = st.beta();
        let theta_dot = st.theta_dot();
        let u1 = st.u1;
        let v1 = st.v1();
        let (u2, v2_offset) = st.tube2();
        let v2 = E3 + v2_offset;

        let n1 = self.outer.force(&st.v1_offset);
        let m1 = self.outer.moment(&u1);
        let n2 = self.inner.force(&v2_offset);
        let m2 = self.inner.moment(&u2);

        let (a1, b1) = self.outer.wrench_map(&u1, &v1, &n1, &m1)?;
        let (a2, b2) = self.inner.wrench_map(&u2, &v2, &n2, &m2)?;

        // [u̇2; v̇2] = D x + d
        let e3x = skew(&E3);
        let mut dmap = SMatrix::<f64, 6, 8>::zeros();
        dmap.fixed_view_mut::<3, 3>(0, 0).copy_from(&(planar() * rt));
        dmap[(2, 6)] = 1.0;
        dmap.fixed_view_mut::<3, 3>(3, 3).copy_from(&(rt * beta));
        dmap.fixed_view_mut::<3, 1>(3, 7).copy_from(&(rt * v1));
        let mut doff = Vector6::zeros();
        doff.fixed_rows_mut::<3>(0).copy_from(&(-(e3x * rt * u1) * theta_dot));
        doff.fixed_rows_mut::<3>(3).copy_from(&(-(e3x * rt * v1) * (beta * theta_dot)));

        // Selection of tube residual components into the eight rows; `rz`
        // brings tube-2 d1, d2 components into frame 1.
        let mut sel1 = SMatrix::<f64, 8, 6>::zeros();
        sel1[(0, 3)] = 1.0;
        sel1[(1, 4)] = 1.0;
        sel1[(2, 0)] = 1.0;
        sel1[(3, 1)] = 1.0;
        sel1[(4, 5)] = 1.0;
        sel1[(6, 2)] = 1.0;
        let mut sel2 = SMatrix::<f64, 8, 6>::zeros();
        for i in 0..2 {
            for j in 0..2 {
                sel2[(i, 3 + j)] = rz[(i, j)];
                sel2[(2 + i, j)] = rz[(i, j)];
            }
        }
        sel2[(5, 5)] = 1.0;
        sel2[(7, 2)] = 1.0;

        let mut lhs = Matrix8::zeros();
        lhs.fixed_view_mut::<8, 6>(0, 0).copy_from(&(sel1 * a1));
        lhs += sel2 * a2 * dmap;
        let rhs = -(sel1 * b1 + sel2 * (a2 * doff + b2));
        Ok((lhs, rhs))
    }

    /// Solves the assembled system and reconstructs the inner-tube rates.
    pub fn derivative(&self, s: f64, st: &OverlapStrains) -> Result<CoupledDerivative, IntegrationError> {
        let (lhs, rhs) = self.assemble(st).map_err(|e| at(s, e))?;
        let x = solve_checked(s, lhs, rhs)?;
        let u1_dot = Vector3::new(x[0], x[1], x[2]);
        let v1_dot = Vector3::new(x[3], x[4], x[5]);
        let (_, _, u2_dot, v2_dot) = reconstruct_tube2_strains(
            &st.u1,
            &st.v1(),
            st.theta,
            st.theta_dot(),
            st.beta(),
            x[7],
            &u1_dot,
            &v1_dot,
            x[6],
        );
        Ok(CoupledDerivative {
            u1_dot,
            v1_dot,
            u2_d3_dot: x[6],
            beta_dot: x[7],
            theta_dot: st.theta_dot(),
            u2_dot,
            v2_dot,
        })
    }

    /// Residuals of the eight overlap equilibrium equations evaluated
    /// directly from their definitions, in the row order of [`assemble`].
    ///
    /// [`assemble`]: OverlapPair::assemble
    pub fn equilibrium_residuals(
        &self,
        st: &OverlapStrains,
        d: &CoupledDerivative,
    ) -> Result<Vector8, IntegrationError> {
        let rz = rot_d3(st.theta);
        let v1 = st.v1();
        let (u2, v2, u2_dot, v2_dot) = reconstruct_tube2_strains(
            &st.u1,
            &v1,
            st.theta,
            d.theta_dot,
            st.beta(),
            d.beta_dot,
            &d.u1_dot,
            &d.v1_dot,
            d.u2_d3_dot,
        );
        let (f1, m1) = single_tube_balance(&self.outer, &st.u1, &v1, &d.u1_dot, &d.v1_dot)?;
        let (f2, m2) = single_tube_balance(&self.inner, &u2, &v2, &u2_dot, &v2_dot)?;
        let msum = m1 + rz * m2;
        let fsum = f1 + rz * f2;
        Ok(Vector8::from_column_slice(&[
            msum.x, msum.y, fsum.x, fsum.y, m1.z, m2.z, f1.z, f2.z,
        ]))
    }

    /// Loads handed to the inner tube when the outer tube ends.
    ///
    /// Returns `(mismatch, n2⁺, m2⁺)`. `mismatch` holds the outer tube's
    /// axial force and torque left unbalanced by its tendon anchor load; both
    /// vanish at a solution. The `d1, d2` remainder of the outer tube's loads
    /// passes to the inner tube.
    pub fn terminate_outer(
        &self,
        st: &OverlapStrains,
    ) -> Result<OuterTermination, IntegrationError> {
        let v1 = st.v1();
        let (anchor_f, anchor_m) = self.outer.anchor_load(&st.u1, &v1)?;
        let n1 = self.outer.force(&st.v1_offset);
        let m1 = self.outer.moment(&st.u1);
        let (u2, v2_offset) = st.tube2();
        let n2 = self.inner.force(&v2_offset);
        let m2 = self.inner.moment(&u2);
        // n1(l1⁻) = F, m1(l1⁻) = M along d3.
        let excess_f = n1 - anchor_f;
        let excess_m = m1 - anchor_m;
        let rt = rot_d3(st.theta).transpose();
        let p = planar();
        Ok((
            [excess_f.z, excess_m.z],
            n2 + rt * (p * excess_f),
            m2 + rt * (p * excess_m),
        ))
    }
}

/// Full local residual `F = ṅ + [u] n + f`, `M = ṁ + [u] m + [v] n + τ` of one tube.
pub fn single_tube_balance(
    tube: &Tube,
    u: &Vector3<f64>,
    v: &Vector3<f64>,
    u_dot: &Vector3<f64>,
    v_dot: &Vector3<f64>,
) -> Result<(Vector3<f64>, Vector3<f64>), IntegrationError> {
    let n = tube.section.k_se * (v - E3);
    let m = tube.section.k_bt * u;
    let n_dot = tube.section.k_se * v_dot;
    let m_dot = tube.section.k_bt * u_dot;
    let load = tube.line_load(u, v, u_dot, v_dot)?;
    Ok((
        n_dot + u.cross(&n) + load.force,
        m_dot + u.cross(&m) + v.cross(&n) + load.moment,
    ))
}

/// Classical single-rod closure: solves the six equilibrium equations for
/// `(u̇, v̇)` given `u` and `v - e3`.
pub fn single_rod_derivative(
    s: f64,
    tube: &Tube,
    u: &Vector3<f64>,
    v_offset: &Vector3<f64>,
) -> Result<(Vector3<f64>, Vector3<f64>), IntegrationError> {
    let v = E3 + v_offset;
    let n = tube.force(v_offset);
    let m = tube.moment(u);
    let (a, b) = tube.wrench_map(u, &v, &n, &m).map_err(|e| at(s, e))?;
    let x = solve_checked(s, a, -b)?;
    Ok((Vector3::new(x[0], x[1], x[2]), Vector3::new(x[3], x[4], x[5])))
}

fn solve_checked<const D: usize>(
    s: f64,
    lhs: SMatrix<f64, D, D>,
    rhs: SVector<f64, D>,
) -> Result<SVector<f64, D>, IntegrationError> {
    let mut scaled = DMatrix::from_column_slice(D, D, lhs.as_slice());
    let mut b = DVector::from_column_slice(rhs.as_slice());
    for i in 0..D {
        let row_max = scaled.row(i).amax();
        if !(row_max > 0.0) || !row_max.is_finite() {
            return Err(IntegrationError::Degenerate {
                s,
                reason: format!("equilibrium row {i} vanishes"),
            });
        }
        scaled.row_mut(i).scale_mut(1.0 / row_max);
        b[i] /= row_max;
    }
    let singular = || IntegrationError::Degenerate {
        s,
        reason: "singular equilibrium system".into(),
    };
    let norm = norm1(&scaled);
    let lu = scaled.lu();
    let inv = lu.try_inverse().ok_or_else(singular)?;
    let cond = norm * norm1(&inv);
    if !(cond < MAX_CONDITION) {
        return Err(IntegrationError::Degenerate {
            s,
            reason: format!("equilibrium system condition {cond:.3e}"),
        });
    }
    let x = lu.solve(&b).ok_or_else(singular)?;
    Ok(SVector::from_column_slice(x.as_slice()))
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max)
}
