//! Measures how much public patch metadata reveals about security fixes that
//! have landed but not yet shipped.
//!
//! An attacker watches each day's pool of unreleased patches and ranks it,
//! either at random, with a classifier trained on already disclosed fixes, or
//! by following bug links. [`simulator`] replays that attack day by day over
//! a [`corpus`] and reports attacker effort and the extra days of exposure it
//! buys; [`randmodel`] gives the random attacker in closed form.

pub mod cli;
pub mod corpus;
pub mod features;
pub mod learner;
pub mod linkattack;
pub mod randmodel;
pub mod simulator;
pub mod synthgen;
