//! Backend that builds and runs rewritten sources with user-supplied shell
//! command templates.
//!
//! Templates may use `{src}` (rewritten source), `{bin}` (suggested output
//! binary) and `{dir}` (the pattern's work directory). Commands run through
//! `sh -c` inside the work directory; stdout of the run command is the
//! program output compared against the baseline.

use std::fs::File;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use super::{BaselineResult, DeviceSpec, EvalJob, Evaluator, Measurement, OutputDigest, Status, DEFAULT_TIMEOUT_SECONDS};
use crate::blocks::normalize_name;
use crate::code_model::{insert_parallel_directives, scan_function_blocks, substitute_function_block, LoopInventory, ScanOptions, SourceUnit};
use crate::error::Error;
use crate::pattern::OffloadMethod;

const POLL: Duration = Duration::from_millis(5);

#[derive(Debug, Clone)]
pub struct ExternalEvaluator {
    work_root: PathBuf,
    compile_timeout_seconds: f64,
    scan_options: ScanOptions,
}

enum Exit {
    Finished { success: bool, stdout: String, elapsed: f64 },
    TimedOut { elapsed: f64 },
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

fn infra(context: &str, path: &Path, e: std::io::Error) -> Error {
    Error::Infrastructure(format!("{context} {}: {e}", path.display()))
}

impl ExternalEvaluator {
    pub fn new(work_root: impl Into<PathBuf>) -> Self {
        ExternalEvaluator {
            work_root: work_root.into(),
            compile_timeout_seconds: 3600.0,
            scan_options: ScanOptions::default(),
        }
    }

    pub fn with_scan_options(mut self, options: ScanOptions) -> Self {
        self.scan_options = options;
        self
    }

    fn commands(device: &DeviceSpec) -> Result<(&str, &str), Error> {
        match (&device.compile_cmd, &device.run_cmd) {
            (Some(c), Some(r)) => Ok((c, r)),
            _ => Err(Error::Infrastructure(format!(
                "device `{}` has no compile_cmd/run_cmd for the external backend",
                device.label()
            ))),
        }
    }

    fn expand(template: &str, src: &Path, dir: &Path) -> String {
        template
            .replace("{src}", &shell_quote(&src.display().to_string()))
            .replace("{bin}", &shell_quote(&dir.join("a.out").display().to_string()))
            .replace("{dir}", &shell_quote(&dir.display().to_string()))
    }

    fn prepare(&self, dir: &Path, unit: &SourceUnit) -> Result<PathBuf, Error> {
        std::fs::create_dir_all(dir).map_err(|e| infra("cannot create work directory", dir, e))?;
        let src = dir.join(unit.file_name());
        std::fs::write(&src, &unit.text).map_err(|e| infra("cannot write", &src, e))?;
        Ok(src)
    }

    fn run(cmd: &str, dir: &Path, tag: &str, timeout: f64, env: &[(&str, &str)]) -> Result<Exit, Error> {
        let out_path = dir.join(format!("{tag}.stdout"));
        let err_path = dir.join(format!("{tag}.stderr"));
        let stdout = File::create(&out_path).map_err(|e| infra("cannot create", &out_path, e))?;
        let stderr = File::create(&err_path).map_err(|e| infra("cannot create", &err_path, e))?;
        let start = Instant::now();
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(cmd)
            .current_dir(dir)
            .envs(env.iter().copied())
            .stdin(Stdio::null())
            .stdout(stdout)
            .stderr(stderr)
            .process_group(0)
            .spawn()
            .map_err(|e| infra("cannot spawn sh in", dir, e))?;
        let limit = Duration::from_secs_f64(timeout);
        loop {
            if let Some(status) = child.try_wait().map_err(|e| infra("wait failed in", dir, e))? {
                let elapsed = start.elapsed().as_secs_f64();
                let stdout = std::fs::read_to_string(&out_path).unwrap_or_default();
                return Ok(Exit::Finished {
                    success: status.success(),
                    stdout,
                    elapsed,
                });
            }
            if start.elapsed() >= limit {
                // The whole process group, so grandchildren die with `sh`.
                unsafe {
                    libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
                }
                let _ = child.wait();
                return Ok(Exit::TimedOut {
                    elapsed: start.elapsed().as_secs_f64(),
                });
            }
            std::thread::sleep(POLL);
        }
    }

    fn rewritten(&self, job: &EvalJob<'_>) -> Result<SourceUnit, Error> {
        match (&job.pattern.method, &job.pattern.block) {
            (OffloadMethod::FunctionBlock, Some(block)) => {
                let sites = scan_function_blocks(&job.inventory.unit, std::slice::from_ref(&block.callee))?;
                let site = sites
                    .iter()
                    .find(|s| s.id == block.site_id && normalize_name(&s.callee_name) == normalize_name(&block.callee))
                    .ok_or(Error::SiteMismatch { site: block.site_id })?;
                let (unit, _) = substitute_function_block(job.inventory, site, &block.entry_point, &self.scan_options)?;
                Ok((*unit).clone())
            }
            _ => insert_parallel_directives(job.inventory, &job.pattern.loops, &job.device.dialect()),
        }
    }
}

impl Evaluator for ExternalEvaluator {
    fn backend_name(&self) -> &'static str {
        "external"
    }

    fn measure_baseline(&self, inventory: &LoopInventory, device: &DeviceSpec) -> Result<BaselineResult, Error> {
        let (compile, run) = Self::commands(device)?;
        let dir = self.work_root.join(device.kind.as_str()).join("baseline");
        let src = self.prepare(&dir, &inventory.unit)?;
        let fail = |reason: String| Error::BaselineFailure {
            device: device.label(),
            reason,
        };
        match Self::run(&Self::expand(compile, &src, &dir), &dir, "compile", self.compile_timeout_seconds, &[])? {
            Exit::Finished { success: true, .. } => {}
            _ => return Err(fail("compile command failed".into())),
        }
        let timeout = device.timeout_seconds.unwrap_or(DEFAULT_TIMEOUT_SECONDS);
        match Self::run(&Self::expand(run, &src, &dir), &dir, "run", timeout, &[("OMP_NUM_THREADS", "1")])? {
            Exit::Finished {
                success: true,
                stdout,
                elapsed,
            } => Ok(BaselineResult {
                time_seconds: elapsed,
                output_digest: Some(OutputDigest::from_output(&stdout)),
            }),
            Exit::Finished { success: false, .. } => Err(fail("run command failed".into())),
            Exit::TimedOut { .. } => Err(fail(format!("run exceeded {timeout} s"))),
        }
    }

    fn evaluate(&self, job: &EvalJob<'_>) -> Result<Measurement, Error> {
        let (compile, run) = Self::commands(job.device)?;
        let key = hex::encode(&Sha256::digest(job.pattern.label().as_bytes())[..8]);
        let dir = self.work_root.join(job.device.kind.as_str()).join(key);
        let unit = self.rewritten(job)?;
        let src = self.prepare(&dir, &unit)?;

        let measurement = |time_seconds: f64, status: Status, digest: Option<OutputDigest>, wall: f64| Measurement {
            time_seconds,
            status,
            output_digest: digest,
            resources_used: 0.0,
            wall_cost_seconds: wall,
        };

        let compile_time = match Self::run(&Self::expand(compile, &src, &dir), &dir, "compile", self.compile_timeout_seconds, &[])? {
            Exit::Finished {
                success: true,
                elapsed,
                ..
            } => elapsed,
            Exit::Finished { elapsed, .. } | Exit::TimedOut { elapsed } => {
                return Ok(measurement(0.0, Status::CompileFail, None, elapsed));
            }
        };
        match Self::run(&Self::expand(run, &src, &dir), &dir, "run", job.timeout_seconds, &[])? {
            Exit::TimedOut { elapsed } => Ok(measurement(
                job.timeout_seconds,
                Status::Timeout,
                None,
                compile_time + elapsed,
            )),
            Exit::Finished {
                success,
                stdout,
                elapsed,
            } => {
                let digest = OutputDigest::from_output(&stdout);
                let correct = success
                    && job
                        .baseline
                        .output_digest
                        .as_ref()
                        .is_none_or(|reference| reference.matches(&digest, job.tolerance));
                let status = if !correct {
                    Status::WrongResult
                } else if elapsed >= job.timeout_seconds {
                    Status::Timeout
                } else {
                    Status::Ok
                };
                Ok(measurement(elapsed, status, Some(digest), compile_time + elapsed))
            }
        }
    }
}
