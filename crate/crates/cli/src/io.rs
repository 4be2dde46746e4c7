//! Input detection, tensor/image conversion and staged output directories.

use std::fs;
use std::path::{Path, PathBuf};

use rbtr_core::format::{self, TENSOR_MAGIC};
use rbtr_core::imaging::{self, ColorImage};
use rbtr_core::RbTensor;

use crate::CliError;

/// Where the data came from, which decides how results are written back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Image { height: usize, width: usize },
    Frames { height: usize, width: usize, frames: usize },
    Tensor,
}

#[derive(Debug, Clone)]
pub struct Input {
    pub kind: Kind,
    /// Encoded data before ket augmentation.
    pub raw: RbTensor,
}

impl Input {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        if !path.exists() {
            return Err(CliError::usage(format!("input {} does not exist", path.display())));
        }
        let ctx = |e: rbtr_core::RbError| CliError::from(e).context(&format!("reading {}", path.display()));
        if path.is_dir() {
            let frames = imaging::load_frames(path).map_err(ctx)?;
            let raw = imaging::encode_frames(&frames).map_err(ctx)?;
            let (height, width) = (frames[0].height, frames[0].width);
            return Ok(Input { kind: Kind::Frames { height, width, frames: frames.len() }, raw });
        }
        let mut head = [0u8; 4];
        let is_tensor = {
            use std::io::Read;
            let mut f = fs::File::open(path).map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))?;
            f.read_exact(&mut head).is_ok() && &head == TENSOR_MAGIC
        };
        if is_tensor {
            let raw = format::load_tensor(path).map_err(ctx)?;
            return Ok(Input { kind: Kind::Tensor, raw });
        }
        let img = ColorImage::load(path).map_err(ctx)?;
        let kind = Kind::Image { height: img.height, width: img.width };
        Ok(Input { kind, raw: imaging::encode_rb(&img) })
    }

    /// The tensor the algorithms run on: ket-augmented for images and frame
    /// stacks, unchanged for raw tensors.
    pub fn working(&self) -> Result<RbTensor, CliError> {
        match self.kind {
            Kind::Tensor => Ok(self.raw.clone()),
            Kind::Image { height, width } | Kind::Frames { height, width, .. } => {
                if height != width || !height.is_power_of_two() || height < 2 {
                    return Err(CliError::usage(format!(
                        "images must be square with a power-of-two side for ket augmentation, got {height}x{width}"
                    )));
                }
                Ok(imaging::ket_augment(&self.raw)?)
            }
        }
    }

    /// Inverse of [`Input::working`].
    pub fn restore(&self, t: &RbTensor) -> Result<RbTensor, CliError> {
        match self.kind {
            Kind::Tensor => Ok(t.clone()),
            Kind::Image { height, .. } | Kind::Frames { height, .. } => {
                Ok(imaging::ket_restore(t, height.trailing_zeros() as usize)?)
            }
        }
    }

    /// Number of real values the input occupies, used as the numerator of
    /// the compression ratio.
    pub fn original_dims(&self) -> Vec<usize> {
        match self.kind {
            Kind::Image { height, width } => vec![height, width, 3],
            Kind::Frames { height, width, frames } => vec![height, width, 3, frames],
            Kind::Tensor => self.raw.dims().to_vec(),
        }
    }

    pub fn is_colour(&self) -> bool {
        self.kind != Kind::Tensor
    }
}

/// Output files are written into a hidden sibling directory first and only
/// moved into place once every file has been produced.
pub struct Staging {
    dir: PathBuf,
    target: PathBuf,
}

impl Staging {
    pub fn new(target: &Path) -> Result<Self, CliError> {
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let name = target.file_name().and_then(|n| n.to_str()).unwrap_or("out");
        let dir = parent.join(format!(".{name}.partial-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| CliError::io(format!("clearing {}: {e}", dir.display())))?;
        }
        fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("creating {}: {e}", dir.display())))?;
        Ok(Staging { dir, target: target.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.path(name), bytes).map_err(|e| CliError::io(format!("writing {name}: {e}")))
    }

    /// Writes `t` as `<stem>.png`, `<stem>/frame_XXXX.png` or `<stem>.rbt`
    /// depending on the input kind.
    pub fn write_data(&self, stem: &str, input: &Input, t: &RbTensor) -> Result<(), CliError> {
        match input.kind {
            Kind::Image { .. } => {
                let img = imaging::decode_rb(t)?;
                self.write(&format!("{stem}.png"), &img.to_png_bytes()?)
            }
            Kind::Frames { .. } => {
                let dir = self.path(stem);
                fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("creating {}: {e}", dir.display())))?;
                for (i, frame) in imaging::decode_frames(t)?.iter().enumerate() {
                    self.write(&format!("{stem}/frame_{i:04}.png"), &frame.to_png_bytes()?)?;
                }
                Ok(())
            }
            Kind::Tensor => self.write(&format!("{stem}.rbt"), &format::tensor_to_bytes(t)),
        }
    }

    /// Moves every staged entry into the target directory, replacing
    /// existing entries of the same name.
    pub fn commit(self) -> Result<(), CliError> {
        let err = |what: &str, p: &Path, e: std::io::Error| CliError::io(format!("{what} {}: {e}", p.display()));
        fs::create_dir_all(&self.target).map_err(|e| err("creating", &self.target, e))?;
        let entries = fs::read_dir(&self.dir).map_err(|e| err("listing", &self.dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| err("listing", &self.dir, e))?;
            let dest = self.target.join(entry.file_name());
            if dest.is_dir() {
                fs::remove_dir_all(&dest).map_err(|e| err("replacing", &dest, e))?;
            }
            fs::rename(entry.path(), &dest).map_err(|e| err("moving into", &dest, e))?;
        }
        fs::remove_dir(&self.dir).map_err(|e| err("removing", &self.dir, e))?;
        Ok(())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.dir);
    }
}
