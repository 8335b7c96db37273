pub mod equivalence;
pub mod grid_checks;
pub mod oracle;
