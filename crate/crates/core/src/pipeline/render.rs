use std::collections::HashSet;
use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::{PipelineError, RenderSetup};
use crate::imageops::GrayImage;

/// One render request. `formula` is the Rendering-mode serialization.
#[derive(Debug, Clone)]
pub struct RenderJob<'a> {
    pub record_id: &'a str,
    pub formula: &'a str,
    pub setup: &'a RenderSetup,
    pub out_image: &'a Path,
    pub scratch_dir: &'a Path,
}

pub trait Renderer: Send + Sync {
    /// Checked once before any record is processed.
    fn check_available(&self) -> Result<(), PipelineError>;

    /// Extension of produced image files, without the dot.
    fn extension(&self) -> &str;

    /// `Ok` only if the output image was written; the caller also verifies
    /// the file exists.
    fn render(&self, job: &RenderJob<'_>) -> Result<(), String>;
}

/// Runs a shell command template per job. Placeholders `{formula-file}`,
/// `{font}`, `{dpi}` and `{out-image}` are substituted shell-quoted.
#[derive(Debug, Clone)]
pub struct CommandRenderer {
    template: String,
    extension: String,
}

impl CommandRenderer {
    pub fn new(template: impl Into<String>) -> CommandRenderer {
        CommandRenderer {
            template: template.into(),
            extension: "png".to_owned(),
        }
    }

    pub fn with_extension(mut self, extension: impl Into<String>) -> CommandRenderer {
        self.extension = extension.into();
        self
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    fn expand(&self, formula_file: &Path, setup: &RenderSetup, out_image: &Path) -> String {
        self.template
            .replace(
                "{formula-file}",
                &shell_quote(&formula_file.to_string_lossy()),
            )
            .replace("{font}", &shell_quote(&setup.font))
            .replace("{dpi}", &setup.dpi.to_string())
            .replace("{out-image}", &shell_quote(&out_image.to_string_lossy()))
    }
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

fn program_exists(program: &str) -> bool {
    if program.contains('/') {
        return Path::new(program).is_file();
    }
    env::var_os("PATH")
        .map(|paths| env::split_paths(&paths).any(|dir| dir.join(program).is_file()))
        .unwrap_or(false)
}

impl Renderer for CommandRenderer {
    fn check_available(&self) -> Result<(), PipelineError> {
        let program = self.template.split_whitespace().next().unwrap_or("");
        if program.is_empty() {
            return Err(PipelineError::RendererUnavailable(
                "empty renderer command".to_owned(),
            ));
        }
        if !program_exists("sh") || !program_exists(program) {
            return Err(PipelineError::RendererUnavailable(format!(
                "`{program}` not found"
            )));
        }
        Ok(())
    }

    fn extension(&self) -> &str {
        &self.extension
    }

    fn render(&self, job: &RenderJob<'_>) -> Result<(), String> {
        let formula_file = job.scratch_dir.join(format!(
            "{}_{}_{}.tex",
            super::file_stem(job.record_id),
            super::file_stem(&job.setup.font),
            job.setup.dpi
        ));
        fs::write(&formula_file, job.formula).map_err(|e| e.to_string())?;
        let cmd = self.expand(&formula_file, job.setup, job.out_image);
        log::debug!("render {}: {cmd}", job.record_id);
        let output = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .output()
            .map_err(|e| e.to_string());
        let _ = fs::remove_file(&formula_file);
        let output = output?;
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            let last = stderr.lines().last().unwrap_or("").trim();
            return Err(format!("renderer exited with {}: {last}", output.status));
        }
        Ok(())
    }
}

/// Deterministic stand-in renderer: writes a small synthetic PGM whose
/// pixels derive from a hash of (formula, font, dpi). Can be told to fail on
/// chosen (record id, font) pairs and records every attempt.
#[derive(Debug, Default)]
pub struct MockRenderer {
    fail_on: HashSet<(String, String)>,
    attempts: Mutex<Vec<(String, String)>>,
}

impl MockRenderer {
    pub fn new() -> MockRenderer {
        MockRenderer::default()
    }

    pub fn fail_on(
        mut self,
        record_id: impl Into<String>,
        font: impl Into<String>,
    ) -> MockRenderer {
        self.fail_on.insert((record_id.into(), font.into()));
        self
    }

    /// (record id, font) for every render call, in call order.
    pub fn attempts(&self) -> Vec<(String, String)> {
        self.attempts.lock().unwrap().clone()
    }

    pub fn synthesize(formula: &str, setup: &RenderSetup) -> GrayImage {
        let digest = Sha256::new()
            .chain_update(formula.as_bytes())
            .chain_update([0])
            .chain_update(setup.font.as_bytes())
            .chain_update(setup.dpi.to_le_bytes())
            .finalize();
        let (w, h) = (32usize, 16usize);
        let mut img = GrayImage::filled(w, h, 255).unwrap();
        // 8x16 cells of ink in the middle rows, one hash bit per cell
        for (i, byte) in digest.iter().take(16).enumerate() {
            for bit in 0..8 {
                if byte >> bit & 1 == 1 {
                    let x = (i % 4) * 8 + bit;
                    let y = 4 + i / 4 * 2;
                    img.set(x, y, 0);
                    img.set(x, y + 1, 0);
                }
            }
        }
        // guarantee some ink whatever the hash
        img.set(0, 4, 0);
        img
    }
}

impl Renderer for MockRenderer {
    fn check_available(&self) -> Result<(), PipelineError> {
        Ok(())
    }

    fn extension(&self) -> &str {
        "pgm"
    }

    fn render(&self, job: &RenderJob<'_>) -> Result<(), String> {
        self.attempts
            .lock()
            .unwrap()
            .push((job.record_id.to_owned(), job.setup.font.clone()));
        if self
            .fail_on
            .contains(&(job.record_id.to_owned(), job.setup.font.clone()))
        {
            return Err(format!("mock failure for font {}", job.setup.font));
        }
        MockRenderer::synthesize(job.formula, job.setup)
            .save(job.out_image)
            .map_err(|e| e.to_string())
    }
}

/// Location of a rendered image relative to the output directory.
pub(crate) fn image_rel_path(record_id: &str, setup: &RenderSetup, extension: &str) -> PathBuf {
    PathBuf::from("images")
        .join(super::file_stem(record_id))
        .join(format!(
            "{}_{}.{extension}",
            super::file_stem(&setup.font),
            setup.dpi
        ))
}
