//! Holds the `acceptance` test target. The criteria themselves live in
//! `nedpca::verify`; this package only exists so that the slow suite runs
//! after every other test binary in the workspace.
