//! HTTP API and command-line front end for qsearch.

pub mod api;
pub mod cli;
pub mod config;
pub mod http;
