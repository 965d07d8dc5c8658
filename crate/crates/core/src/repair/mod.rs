//! Template-based patch generation and test-driven validation.

mod engine;
mod templates;

pub use engine::{
    generate_candidates, map_patch_to_original, passes_all, repair, validate_patch,
    PatchCandidate, RepairCaps, RepairError, RepairResult, StopReason, ValidationResult,
    ValidationVerdict,
};
pub use templates::{applicable_templates, scope_at, Edit, Instantiation, TemplateId};
