use super::EngineError;

/// One contiguous particle range advanced with a single signed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispatch {
    pub first: usize,
    pub count: usize,
    pub h: f32,
}

/// A device that holds the position buffer and advances it.
///
/// Positions cross this boundary in the backend's own layout for whole-buffer
/// uploads, and row-major (`count x dims`) for partial reads and writes.
pub trait Backend: Send {
    /// Short identifier used in reports ("cpu", "cpu1", "gpu").
    fn id(&self) -> &str;

    /// Human-readable device description.
    fn device_name(&self) -> String;

    /// Replace the whole position buffer.
    fn upload(&mut self, positions: &[f32]) -> Result<(), EngineError>;

    fn set_params(&mut self, values: &[f32]) -> Result<(), EngineError>;

    /// Advance each dispatch range by one RK4 step.
    fn step(&mut self, dispatches: &[Dispatch]) -> Result<(), EngineError>;

    /// Row-major copy of particles `first..first + count`.
    fn read(&mut self, first: usize, count: usize) -> Result<Vec<f32>, EngineError>;

    /// Overwrite individual particles; `values` is row-major, one row per id.
    fn write(&mut self, ids: &[usize], values: &[f32]) -> Result<(), EngineError>;

    /// Block until all submitted work has completed.
    fn synchronize(&mut self) -> Result<(), EngineError> {
        Ok(())
    }
}
