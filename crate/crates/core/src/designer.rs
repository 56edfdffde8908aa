//! Thickness optimization for stacks with fixed materials.
//!
//! The search is a seeded multi-start cyclic coordinate descent: the template
//! point is refined first, then `max(4, free layers)` Latin-hypercube starts.
//! Each coordinate starts with a step of 10% of its bound range, moves when a
//! `+step` or `-step` probe strictly improves, and halves its step after a
//! failed probe pair. A start ends once every free coordinate has failed at a
//! step of at most 0.25 nm. Evaluation order is fixed, so results only depend
//! on the inputs and the seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorimetry::{ColorError, Colorimeter};
use crate::tmm::{self, Channel, IncidenceSpec, PreparedStack, StackSpec, TmmError, WavelengthGrid};

/// Normalization length for peak-position misses.
pub const PEAK_SCALE_NM: f64 = 100.0;
/// Penalty multiplier when a channel has no local maximum at all.
pub const MISSING_PEAK_PENALTY: f64 = 10.0;
pub const MIN_STEP_NM: f64 = 0.25;
const INITIAL_STEP_FRACTION: f64 = 0.1;
const MIN_STARTS: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum DesignError {
    #[error("invalid design space: {0}")]
    InvalidSpace(String),
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("budget must be at least one evaluation")]
    ZeroBudget,
    #[error(transparent)]
    Tmm(#[from] TmmError),
    #[error(transparent)]
    Color(#[from] ColorError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetKind {
    PeakAt { wavelength_nm: f64, channel: Channel },
    ValueAt { wavelength_nm: f64, channel: Channel, target: f64 },
    ModeColorSeparation { min_distance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignTarget {
    pub kind: TargetKind,
    pub weight: f64,
}

impl DesignTarget {
    pub fn peak_at(wavelength_nm: f64, channel: Channel) -> Self {
        Self {
            kind: TargetKind::PeakAt { wavelength_nm, channel },
            weight: 1.0,
        }
    }

    pub fn value_at(wavelength_nm: f64, channel: Channel, target: f64) -> Self {
        Self {
            kind: TargetKind::ValueAt {
                wavelength_nm,
                channel,
                target,
            },
            weight: 1.0,
        }
    }

    pub fn mode_color_separation(min_distance: f64) -> Self {
        Self {
            kind: TargetKind::ModeColorSeparation { min_distance },
            weight: 1.0,
        }
    }

    pub fn weighted(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpace {
    template: StackSpec,
    bounds: Vec<(f64, f64)>,
    frozen: Vec<bool>,
}

impl DesignSpace {
    pub fn new(template: StackSpec, bounds: Vec<(f64, f64)>, frozen: Vec<bool>) -> Result<Self, DesignError> {
        let n = template.layers.len();
        if bounds.len() != n || frozen.len() != n {
            return Err(DesignError::InvalidSpace(format!(
                "{n} layers but {} bounds and {} frozen flags",
                bounds.len(),
                frozen.len()
            )));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
                return Err(DesignError::InvalidSpace(format!("layer {i}: bounds [{lo}, {hi}] are not 0 < min < max")));
            }
            let d = template.layers[i].thickness_nm();
            if !frozen[i] && !(lo..=hi).contains(&d) {
                return Err(DesignError::InvalidSpace(format!(
                    "layer {i}: template thickness {d} nm outside [{lo}, {hi}]"
                )));
            }
        }
        if frozen.iter().all(|&f| f) {
            return Err(DesignError::InvalidSpace("every layer is frozen".into()));
        }
        Ok(Self {
            template,
            bounds,
            frozen,
        })
    }

    pub fn template(&self) -> &StackSpec {
        &self.template
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn frozen(&self) -> &[bool] {
        &self.frozen
    }

    fn free(&self) -> Vec<usize> {
        (0..self.frozen.len()).filter(|&i| !self.frozen[i]).collect()
    }

    pub fn contains(&self, thicknesses: &[f64]) -> bool {
        thicknesses.len() == self.bounds.len()
            && thicknesses.iter().enumerate().all(|(i, &d)| {
                if self.frozen[i] {
                    d == self.template.layers[i].thickness_nm()
                } else {
                    d >= self.bounds[i].0 && d <= self.bounds[i].1
                }
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    pub thicknesses_nm: Vec<f64>,
    pub objective: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Weighted target misfit for one fixed set of materials, evaluated as a
/// function of the layer thicknesses.
#[derive(Debug, Clone)]
pub struct Objective {
    targets: Vec<DesignTarget>,
    spectrum: Option<PreparedStack>,
    points: Option<PreparedStack>,
    colorimeter: Option<Colorimeter>,
}

impl Objective {
    pub fn new(stack: &StackSpec, targets: &[DesignTarget], grid: &WavelengthGrid) -> Result<Self, DesignError> {
        let (lo, hi) = (grid.points()[0], grid.points()[grid.len() - 1]);
        let mut point_wavelengths = Vec::new();
        let mut needs_spectrum = false;
        let mut needs_color = false;
        for t in targets {
            if !(t.weight.is_finite() && t.weight > 0.0) {
                return Err(DesignError::InvalidTarget(format!("weight must be > 0, got {}", t.weight)));
            }
            match t.kind {
                TargetKind::PeakAt { wavelength_nm, .. } => {
                    check_in_grid(wavelength_nm, lo, hi)?;
                    needs_spectrum = true;
                }
                TargetKind::ValueAt { wavelength_nm, target, .. } => {
                    check_in_grid(wavelength_nm, lo, hi)?;
                    if !(0.0..=1.0).contains(&target) {
                        return Err(DesignError::InvalidTarget(format!("target value {target} outside [0, 1]")));
                    }
                    if !point_wavelengths.contains(&wavelength_nm) {
                        point_wavelengths.push(wavelength_nm);
                    }
                }
                TargetKind::ModeColorSeparation { min_distance } => {
                    if !(min_distance.is_finite() && min_distance >= 0.0) {
                        return Err(DesignError::InvalidTarget(format!("min_distance {min_distance} must be >= 0")));
                    }
                    needs_spectrum = true;
                    needs_color = true;
                }
            }
        }
        point_wavelengths.sort_by(f64::total_cmp);
        let spectrum = needs_spectrum.then(|| PreparedStack::new(stack, grid)).transpose()?;
        let points = if point_wavelengths.is_empty() {
            None
        } else {
            Some(PreparedStack::new(stack, &WavelengthGrid::from_points(point_wavelengths)?)?)
        };
        Ok(Self {
            targets: targets.to_vec(),
            spectrum,
            points,
            colorimeter: needs_color.then(Colorimeter::standard),
        })
    }

    pub fn evaluate(&self, thicknesses: &[f64]) -> Result<f64, DesignError> {
        let incidence = IncidenceSpec::normal();
        let spectrum = self
            .spectrum
            .as_ref()
            .map(|p| p.response_with(&incidence, thicknesses))
            .transpose()?;
        let points = self
            .points
            .as_ref()
            .map(|p| p.response_with(&incidence, thicknesses))
            .transpose()?;
        let mut separation = None;
        let mut total = 0.0;
        for t in &self.targets {
            let term = match t.kind {
                TargetKind::ValueAt {
                    wavelength_nm,
                    channel,
                    target,
                } => {
                    let resp = points.as_ref().expect("prepared for value targets");
                    let i = resp
                        .wavelengths
                        .iter()
                        .position(|&w| w == wavelength_nm)
                        .expect("target wavelength prepared");
                    (resp.channel(channel)[i] - target).powi(2)
                }
                TargetKind::PeakAt { wavelength_nm, channel } => {
                    let resp = spectrum.as_ref().expect("prepared for peak targets");
                    let peaks = tmm::local_maxima(&resp.wavelengths, resp.channel(channel));
                    match peaks.iter().map(|p| (p - wavelength_nm).abs()).min_by(f64::total_cmp) {
                        Some(miss) => (miss / PEAK_SCALE_NM).powi(2),
                        None => MISSING_PEAK_PENALTY,
                    }
                }
                TargetKind::ModeColorSeparation { min_distance } => {
                    let actual = match separation {
                        Some(d) => d,
                        None => {
                            let resp = spectrum.as_ref().expect("prepared for colour targets");
                            let colorimeter = self.colorimeter.as_ref().expect("prepared colorimeter");
                            let d = colorimeter.mode_colors_of(resp)?.separation();
                            separation = Some(d);
                            d
                        }
                    };
                    (min_distance - actual).max(0.0).powi(2)
                }
            };
            total += t.weight * term;
        }
        Ok(total)
    }
}

fn check_in_grid(w: f64, lo: f64, hi: f64) -> Result<(), DesignError> {
    if !(w >= lo && w <= hi) {
        return Err(DesignError::InvalidTarget(format!("wavelength {w} nm outside grid [{lo}, {hi}]")));
    }
    Ok(())
}

/// Objective of `stack` on the default 350-800 nm grid.
pub fn objective(stack: &StackSpec, targets: &[DesignTarget]) -> Result<f64, DesignError> {
    Objective::new(stack, targets, &WavelengthGrid::visible())?.evaluate(&stack.thicknesses())
}

/// One objective evaluation as seen by an optimization observer.
#[derive(Debug, Clone, Copy)]
pub struct Evaluation<'a> {
    pub thicknesses: &'a [f64],
    pub objective: f64,
    pub best_so_far: f64,
}

pub fn optimize(
    space: &DesignSpace,
    targets: &[DesignTarget],
    budget: usize,
    seed: u64,
) -> Result<DesignResult, DesignError> {
    optimize_observed(space, targets, budget, seed, &WavelengthGrid::visible(), |_| {})
}

struct Search<'a, F> {
    objective: &'a Objective,
    budget: usize,
    evaluations: usize,
    best: (Vec<f64>, f64),
    observer: F,
}

impl<F: FnMut(&Evaluation)> Search<'_, F> {
    /// `None` once the budget is spent.
    fn eval(&mut self, x: &[f64]) -> Result<Option<f64>, DesignError> {
        if self.evaluations >= self.budget {
            return Ok(None);
        }
        let f = self.objective.evaluate(x)?;
        self.evaluations += 1;
        if f < self.best.1 {
            self.best = (x.to_vec(), f);
        }
        (self.observer)(&Evaluation {
            thicknesses: x,
            objective: f,
            best_so_far: self.best.1,
        });
        Ok(Some(f))
    }

    /// Coordinate descent from `x` with objective `fx`; `false` if the budget
    /// ran out first.
    fn descend(&mut self, space: &DesignSpace, mut x: Vec<f64>, mut fx: f64) -> Result<bool, DesignError> {
        let free = space.free();
        let mut step: Vec<f64> = space
            .bounds
            .iter()
            .map(|(lo, hi)| INITIAL_STEP_FRACTION * (hi - lo))
            .collect();
        let mut settled = vec![false; x.len()];
        loop {
            for &d in &free {
                let (lo, hi) = space.bounds[d];
                let mut moved = false;
                for dir in [1.0, -1.0] {
                    let cand_d = (x[d] + dir * step[d]).clamp(lo, hi);
                    if cand_d == x[d] {
                        continue;
                    }
                    let mut cand = x.clone();
                    cand[d] = cand_d;
                    let Some(f) = self.eval(&cand)? else {
                        return Ok(false);
                    };
                    if f < fx {
                        x = cand;
                        fx = f;
                        moved = true;
                        break;
                    }
                }
                if moved {
                    settled[d] = false;
                } else if step[d] > MIN_STEP_NM {
                    step[d] *= 0.5;
                    settled[d] = false;
                } else {
                    settled[d] = true;
                }
            }
            if free.iter().all(|&d| settled[d]) {
                return Ok(true);
            }
        }
    }
}

/// Latin-hypercube sample of `count` points over the free coordinates.
fn latin_hypercube(space: &DesignSpace, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let base = space.template.thicknesses();
    let mut points = vec![base; count];
    for d in space.free() {
        let (lo, hi) = space.bounds[d];
        let mut strata: Vec<usize> = (0..count).collect();
        strata.shuffle(rng);
        for (p, s) in points.iter_mut().zip(strata) {
            let u: f64 = rng.gen();
            p[d] = (lo + (s as f64 + u) / count as f64 * (hi - lo)).clamp(lo, hi);
        }
    }
    points
}

/// [`optimize`] with an explicit grid and a callback invoked after every
/// objective evaluation, in evaluation order.
pub fn optimize_observed<F: FnMut(&Evaluation)>(
    space: &DesignSpace,
    targets: &[DesignTarget],
    budget: usize,
    seed: u64,
    grid: &WavelengthGrid,
    observer: F,
) -> Result<DesignResult, DesignError> {
    if budget == 0 {
        return Err(DesignError::ZeroBudget);
    }
    let objective = Objective::new(&space.template, targets, grid)?;
    let template = space.template.thicknesses();
    let mut search = Search {
        objective: &objective,
        budget,
        evaluations: 0,
        best: (template.clone(), f64::INFINITY),
        observer,
    };
    let f0 = search.eval(&template)?.expect("budget >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts = latin_hypercube(space, MIN_STARTS.max(space.free().len()), &mut rng);

    let mut converged = search.descend(space, template, f0)?;
    for start in starts {
        if !converged {
            break;
        }
        let Some(f) = search.eval(&start)? else {
            converged = false;
            break;
        };
        converged = search.descend(space, start, f)?;
    }
    let (thicknesses_nm, objective) = search.best.clone();
    Ok(DesignResult {
        thicknesses_nm,
        objective,
        evaluations: search.evaluations,
        converged,
    })
}
