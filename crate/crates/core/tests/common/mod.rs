#![allow(dead_code)]

pub mod claims;
