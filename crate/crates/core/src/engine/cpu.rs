//! Multi-core CPU backend.
//!
//! Particles are processed in blocks of [`LANES`]: each block is gathered
//! into the program's lane registers, advanced by one RK4 step and scattered
//! back. Blocks are distributed over the rayon pool. The stage arithmetic
//! is written in the same order as the generated kernel so both backends
//! round identically apart from transcendental implementations.

use rayon::prelude::*;

use super::backend::{Backend, Dispatch};
use super::EngineError;
use crate::expr::program::{Lane, Program, Scratch, LANES};
use crate::layout::Layout;

// Particles per parallel work item.
const SUPER_BLOCK: usize = LANES * 64;

pub struct CpuBackend {
    id: &'static str,
    program: Program,
    layout: Layout,
    particles: usize,
    positions: Vec<f32>,
    params: Vec<f32>,
    pool: Option<rayon::ThreadPool>,
}

struct Workspace {
    scratch: Scratch,
    x: Vec<Lane>,
    k: Vec<Lane>,
    acc: Vec<Lane>,
}

impl Workspace {
    fn new(program: &Program, params: &[f32]) -> Self {
        let mut scratch = program.scratch();
        program.load_params(&mut scratch, params);
        let n = program.dims();
        Workspace {
            scratch,
            x: vec![[0.0; LANES]; n],
            k: vec![[0.0; LANES]; n],
            acc: vec![[0.0; LANES]; n],
        }
    }

    /// Advance the lanes held in `x` by one step of size `h`.
    fn rk4(&mut self, program: &Program, h: f32) {
        let n = self.x.len();
        let half_h = 0.5 * h;
        let sixth_h = h / 6.0;
        self.scratch.state_mut(n).copy_from_slice(&self.x);
        for stage in 0..4 {
            program.run(&mut self.scratch);
            for d in 0..n {
                self.k[d] = *program.output(&self.scratch, d);
            }
            for d in 0..n {
                let (acc, k) = (&mut self.acc[d], &self.k[d]);
                match stage {
                    0 => *acc = *k,
                    1 | 2 => (0..LANES).for_each(|l| acc[l] += 2.0 * k[l]),
                    _ => (0..LANES).for_each(|l| acc[l] += k[l]),
                }
            }
            let scale = match stage {
                0 | 1 => half_h,
                2 => h,
                _ => break,
            };
            let state = self.scratch.state_mut(n);
            for d in 0..n {
                for l in 0..LANES {
                    state[d][l] = self.x[d][l] + scale * self.k[d][l];
                }
            }
        }
        for d in 0..n {
            for l in 0..LANES {
                self.x[d][l] += sixth_h * self.acc[d][l];
            }
        }
    }
}

impl CpuBackend {
    /// Backend on the global rayon pool.
    pub fn new(program: Program, layout: Layout, particles: usize) -> Self {
        let dims = program.dims();
        CpuBackend {
            id: "cpu",
            params: vec![0.0; program.param_count()],
            program,
            layout,
            particles,
            positions: vec![0.0; particles * dims],
            pool: None,
        }
    }

    /// Backend confined to one worker thread.
    pub fn single_threaded(
        program: Program,
        layout: Layout,
        particles: usize,
    ) -> Result<Self, EngineError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| EngineError::Device(e.to_string()))?;
        Ok(CpuBackend {
            id: "cpu1",
            pool: Some(pool),
            ..CpuBackend::new(program, layout, particles)
        })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// The whole buffer in this backend's layout.
    pub fn positions(&self) -> &[f32] {
        &self.positions
    }

    fn dims(&self) -> usize {
        self.program.dims()
    }
}

fn advance_row_major(program: &Program, params: &[f32], slice: &mut [f32], h: f32) {
    let n = program.dims();
    slice
        .par_chunks_mut(SUPER_BLOCK * n)
        .for_each_init(
            || Workspace::new(program, params),
            |ws, chunk| {
                for block in chunk.chunks_mut(LANES * n) {
                    let lanes = block.len() / n;
                    for l in 0..lanes {
                        for d in 0..n {
                            ws.x[d][l] = block[l * n + d];
                        }
                    }
                    ws.rk4(program, h);
                    for l in 0..lanes {
                        for d in 0..n {
                            block[l * n + d] = ws.x[d][l];
                        }
                    }
                }
            },
        );
}

fn advance_column_major(
    program: &Program,
    params: &[f32],
    positions: &mut [f32],
    particles: usize,
    range: std::ops::Range<usize>,
    h: f32,
) {
    let n = program.dims();
    let supers = range.len().div_ceil(SUPER_BLOCK);
    let mut work: Vec<Vec<&mut [f32]>> = (0..supers).map(|_| Vec::with_capacity(n)).collect();
    for column in positions.chunks_mut(particles) {
        for (i, piece) in column[range.clone()].chunks_mut(SUPER_BLOCK).enumerate() {
            work[i].push(piece);
        }
    }
    work.into_par_iter().for_each_init(
        || Workspace::new(program, params),
        |ws, mut columns| {
            let len = columns[0].len();
            for start in (0..len).step_by(LANES) {
                let lanes = LANES.min(len - start);
                for d in 0..n {
                    ws.x[d][..lanes].copy_from_slice(&columns[d][start..start + lanes]);
                }
                ws.rk4(program, h);
                for (d, col) in columns.iter_mut().enumerate() {
                    col[start..start + lanes].copy_from_slice(&ws.x[d][..lanes]);
                }
            }
        },
    );
}

impl Backend for CpuBackend {
    fn id(&self) -> &str {
        self.id
    }

    fn device_name(&self) -> String {
        let threads = match &self.pool {
            Some(p) => p.current_num_threads(),
            None => rayon::current_num_threads(),
        };
        format!("host CPU ({threads} thread{})", if threads == 1 { "" } else { "s" })
    }

    fn upload(&mut self, positions: &[f32]) -> Result<(), EngineError> {
        if positions.len() != self.positions.len() {
            return Err(EngineError::Device(format!(
                "upload of {} values into a buffer of {}",
                positions.len(),
                self.positions.len()
            )));
        }
        self.positions.copy_from_slice(positions);
        Ok(())
    }

    fn set_params(&mut self, values: &[f32]) -> Result<(), EngineError> {
        self.params.copy_from_slice(values);
        Ok(())
    }

    fn step(&mut self, dispatches: &[Dispatch]) -> Result<(), EngineError> {
        let n = self.dims();
        let CpuBackend {
            program,
            layout,
            particles,
            positions,
            params,
            pool,
            ..
        } = self;
        let mut run = || {
            for d in dispatches.iter().filter(|d| d.count > 0) {
                let range = d.first..d.first + d.count;
                match layout {
                    Layout::RowMajor => advance_row_major(
                        program,
                        params,
                        &mut positions[range.start * n..range.end * n],
                        d.h,
                    ),
                    Layout::ColumnMajor => {
                        advance_column_major(program, params, positions, *particles, range, d.h)
                    }
                }
            }
        };
        match pool {
            Some(p) => p.install(run),
            None => run(),
        }
        Ok(())
    }

    fn read(&mut self, first: usize, count: usize) -> Result<Vec<f32>, EngineError> {
        let n = self.dims();
        let mut out = Vec::with_capacity(count * n);
        for p in first..first + count {
            for d in 0..n {
                out.push(self.positions[self.layout.index(p, d, self.particles, n)]);
            }
        }
        Ok(out)
    }

    fn write(&mut self, ids: &[usize], values: &[f32]) -> Result<(), EngineError> {
        let n = self.dims();
        for (row, &p) in ids.iter().enumerate() {
            for d in 0..n {
                self.positions[self.layout.index(p, d, self.particles, n)] = values[row * n + d];
            }
        }
        Ok(())
    }
}
