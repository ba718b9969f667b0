// SPDX-License-Identifier: Apache-2.0

use std::fmt::Display;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_EXTERNAL: u8 = 3;

/// An error paired with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub fn usage(msg: impl Display) -> Failure {
    Failure {
        code: EXIT_USAGE,
        error: anyhow::anyhow!("{msg}"),
    }
}

pub fn data(msg: impl Display) -> Failure {
    Failure {
        code: EXIT_DATA,
        error: anyhow::anyhow!("{msg}"),
    }
}

pub trait OrFail<T> {
    fn or_code(self, code: u8, what: impl Display) -> CmdResult<T>;

    /// Bad or missing input files and artifacts.
    fn or_data(self, what: impl Display) -> CmdResult<T>
    where
        Self: Sized,
    {
        self.or_code(EXIT_DATA, what)
    }
}

impl<T, E: Into<anyhow::Error>> OrFail<T> for Result<T, E> {
    fn or_code(self, code: u8, what: impl Display) -> CmdResult<T> {
        self.map_err(|e| Failure {
            code,
            error: e.into().context(what.to_string()),
        })
    }
}
