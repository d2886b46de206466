pub mod cosets;
pub mod csp;
pub mod ensembles;
pub mod exactlp;
pub mod gf;
pub mod lashier;
pub mod local;
pub mod pidist;
pub mod rational;
pub mod report;
pub mod sahier;
pub mod rng;
