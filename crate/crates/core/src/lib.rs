//! Slice-accelerated automated program repair over SLANG programs.
//!
//! The pipeline reduces a buggy program with observation-based slicing,
//! drops tests that no longer apply to the slice, localizes faults with
//! Ochiai spectra, and searches template patches under a configurable
//! combination of original/reduced program, suite and suspicious list.

pub mod lang;
pub mod faultloc;
pub mod harness;
pub mod reducer;
pub mod repair;
pub mod slicer;
pub mod experiment;
