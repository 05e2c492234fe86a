pub mod error;
pub mod hull;
pub mod lp;
pub mod model;
pub mod rational;
pub mod feasible;
pub mod evaluate;
pub mod fullgame;
pub mod optimize;
pub mod io;
pub mod cli;
