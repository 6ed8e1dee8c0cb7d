//! Survival analysis of staged venture financing: Kaplan-Meier curves,
//! logrank tests, Cox proportional-hazards fits with proportionality
//! diagnostics, cause-specific competing risks and a seeded synthetic panel
//! generator.
//!
//! ```
//! use stagesurv::cox::{fit_cox, FitControls, TieMethod};
//! use stagesurv::panel::build_design;
//! use stagesurv::synth::{generate, Scenario};
//!
//! let scenario = Scenario::default();
//! let (records, truth) = generate(&scenario).unwrap();
//! let design = build_design(&records, &truth.recipe).unwrap();
//! let fit = fit_cox(&design, TieMethod::Breslow, &FitControls::default()).unwrap();
//! assert_eq!(fit.covariates, ["trafficDelta", "hasTrendsData"]);
//! ```

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod competing;
pub mod cox;
pub mod design;
pub mod diagnostics;
pub mod error;
pub mod km;
pub mod linalg;
pub mod panel;
pub mod records;
pub mod render;
pub mod special;
pub mod synth;

pub use competing::{fit_competing, recensor_by_cause, CauseSpec, CompetingRiskReport};
pub use cox::{
    fit_cox, log_partial_likelihood, percent_hazard_change, CoxFit, FitControls, TieMethod,
};
pub use design::DesignMatrix;
pub use diagnostics::{
    grambsch_therneau_test, scale_residuals, schoenfeld_residuals, GTransform, PhTestReport,
};
pub use error::{Error, Result};
pub use km::{kaplan_meier, logrank_test, SurvivalCurve};
pub use panel::{build_design, load_panel, summarize_panel, CovariateRecipe};
pub use records::{build_risk_index, CompanyType, EventKind, IntervalRecord, RiskSetIndex};
pub use synth::{generate, Scenario};
