//! wgpu compute backend running the generated RK4 kernel.

use bytemuck::{Pod, Zeroable};
use wgpu::util::DeviceExt;

use super::backend::{Backend, Dispatch};
use super::EngineError;
use crate::expr::KernelSource;
use crate::layout::Layout;

#[repr(C)]
#[derive(Debug, Clone, Copy, Pod, Zeroable)]
struct StepUniform {
    h: f32,
    first: u32,
    count: u32,
    total: u32,
}

const MAX_GROUPS_PER_DIM: u32 = 65_535;

struct Slot {
    uniform: wgpu::Buffer,
    bind_group: wgpu::BindGroup,
}

pub struct GpuBackend {
    device: wgpu::Device,
    queue: wgpu::Queue,
    adapter_name: String,
    pipeline: wgpu::ComputePipeline,
    layout: Layout,
    particles: usize,
    dims: usize,
    positions: wgpu::Buffer,
    params: wgpu::Buffer,
    // one uniform + bind group per dispatch within a submission
    slots: Vec<Slot>,
}

fn device_err(e: impl std::fmt::Display) -> EngineError {
    EngineError::Device(e.to_string())
}

fn request_device() -> Result<(wgpu::Adapter, wgpu::Device, wgpu::Queue), EngineError> {
    let instance =
        wgpu::Instance::new(wgpu::InstanceDescriptor::new_without_display_handle_from_env());
    let adapter = futures::executor::block_on(
        instance.request_adapter(&wgpu::RequestAdapterOptions::default()),
    )
    .map_err(|e| EngineError::BackendUnavailable(format!("no GPU adapter: {e}")))?;
    let (device, queue) = futures::executor::block_on(adapter.request_device(
        &wgpu::DeviceDescriptor {
            label: Some("swarm"),
            required_limits: adapter.limits(),
            ..Default::default()
        },
    ))
    .map_err(|e| EngineError::BackendUnavailable(format!("device request failed: {e}")))?;
    Ok((adapter, device, queue))
}

/// Name of the first usable adapter, or why there is none.
pub fn probe() -> Result<String, EngineError> {
    let (adapter, _, _) = request_device()?;
    let info = adapter.get_info();
    Ok(format!("{} ({:?})", info.name, info.backend))
}

impl GpuBackend {
    pub fn new(
        kernel: &KernelSource,
        particles: usize,
        dims: usize,
        param_count: usize,
    ) -> Result<Self, EngineError> {
        let (adapter, device, queue) = request_device()?;
        let info = adapter.get_info();
        let bytes = (particles * dims * 4) as u64;
        let limits = device.limits();
        if bytes > limits.max_storage_buffer_binding_size as u64 || bytes > limits.max_buffer_size {
            return Err(device_err(format!(
                "position buffer of {bytes} bytes exceeds the device limit"
            )));
        }

        let module = device.create_shader_module(wgpu::ShaderModuleDescriptor {
            label: Some("rk4 kernel"),
            source: wgpu::ShaderSource::Wgsl(kernel.source.as_str().into()),
        });
        let pipeline = device.create_compute_pipeline(&wgpu::ComputePipelineDescriptor {
            label: Some("rk4 pipeline"),
            layout: None,
            module: &module,
            entry_point: Some(kernel.entry_point),
            compilation_options: Default::default(),
            cache: None,
        });
        let positions = device.create_buffer(&wgpu::BufferDescriptor {
            label: Some("positions"),
            size: bytes.max(4),
            usage: wgpu::BufferUsages::STORAGE
                | wgpu::BufferUsages::COPY_SRC
                | wgpu::BufferUsages::COPY_DST,
            mapped_at_creation: false,
        });
        let params = device.create_buffer(&wgpu::BufferDescriptor {
            label: Some("params"),
            size: (param_count.max(1) * 4) as u64,
            usage: wgpu::BufferUsages::STORAGE | wgpu::BufferUsages::COPY_DST,
            mapped_at_creation: false,
        });
        Ok(GpuBackend {
            device,
            queue,
            adapter_name: format!("{} ({:?})", info.name, info.backend),
            pipeline,
            layout: kernel.layout,
            particles,
            dims,
            positions,
            params,
            slots: Vec::new(),
        })
    }

    fn slot(&mut self, i: usize) -> &Slot {
        while self.slots.len() <= i {
            let uniform = self.device.create_buffer_init(&wgpu::util::BufferInitDescriptor {
                label: Some("dispatch"),
                contents: bytemuck::bytes_of(&StepUniform::zeroed()),
                usage: wgpu::BufferUsages::UNIFORM | wgpu::BufferUsages::COPY_DST,
            });
            let bind_group = self.device.create_bind_group(&wgpu::BindGroupDescriptor {
                label: Some("rk4 bindings"),
                layout: &self.pipeline.get_bind_group_layout(0),
                entries: &[
                    wgpu::BindGroupEntry {
                        binding: 0,
                        resource: self.positions.as_entire_binding(),
                    },
                    wgpu::BindGroupEntry {
                        binding: 1,
                        resource: self.params.as_entire_binding(),
                    },
                    wgpu::BindGroupEntry {
                        binding: 2,
                        resource: uniform.as_entire_binding(),
                    },
                ],
            });
            self.slots.push(Slot {
                uniform,
                bind_group,
            });
        }
        &self.slots[i]
    }

    fn wait(&self) -> Result<(), EngineError> {
        self.device
            .poll(wgpu::PollType::wait_indefinitely())
            .map(|_| ())
            .map_err(device_err)
    }

    /// Byte ranges of the buffer holding particles `first..first+count`, in
    /// the order [`GpuBackend::read`] concatenates them.
    fn spans(&self, first: usize, count: usize) -> Vec<(u64, u64)> {
        match self.layout {
            Layout::RowMajor => vec![(
                (first * self.dims * 4) as u64,
                (count * self.dims * 4) as u64,
            )],
            Layout::ColumnMajor => (0..self.dims)
                .map(|d| (((d * self.particles + first) * 4) as u64, (count * 4) as u64))
                .collect(),
        }
    }
}

impl Backend for GpuBackend {
    fn id(&self) -> &str {
        "gpu"
    }

    fn device_name(&self) -> String {
        self.adapter_name.clone()
    }

    fn upload(&mut self, positions: &[f32]) -> Result<(), EngineError> {
        self.queue
            .write_buffer(&self.positions, 0, bytemuck::cast_slice(positions));
        Ok(())
    }

    fn set_params(&mut self, values: &[f32]) -> Result<(), EngineError> {
        if !values.is_empty() {
            self.queue
                .write_buffer(&self.params, 0, bytemuck::cast_slice(values));
        }
        Ok(())
    }

    fn step(&mut self, dispatches: &[Dispatch]) -> Result<(), EngineError> {
        let active: Vec<&Dispatch> = dispatches.iter().filter(|d| d.count > 0).collect();
        for (i, d) in active.iter().enumerate() {
            let uniform = StepUniform {
                h: d.h,
                first: d.first as u32,
                count: d.count as u32,
                total: self.particles as u32,
            };
            let buffer = self.slot(i).uniform.clone();
            self.queue
                .write_buffer(&buffer, 0, bytemuck::bytes_of(&uniform));
        }
        let mut encoder = self
            .device
            .create_command_encoder(&wgpu::CommandEncoderDescriptor { label: Some("step") });
        {
            let mut pass = encoder.begin_compute_pass(&wgpu::ComputePassDescriptor {
                label: Some("rk4"),
                timestamp_writes: None,
            });
            pass.set_pipeline(&self.pipeline);
            for (i, d) in active.iter().enumerate() {
                let groups = (d.count as u32).div_ceil(crate::expr::codegen::WORKGROUP_SIZE);
                let x = groups.min(MAX_GROUPS_PER_DIM);
                let y = groups.div_ceil(x);
                pass.set_bind_group(0, &self.slots[i].bind_group, &[]);
                pass.dispatch_workgroups(x, y, 1);
            }
        }
        self.queue.submit([encoder.finish()]);
        Ok(())
    }

    fn read(&mut self, first: usize, count: usize) -> Result<Vec<f32>, EngineError> {
        if count == 0 {
            return Ok(Vec::new());
        }
        let spans = self.spans(first, count);
        let total: u64 = spans.iter().map(|s| s.1).sum();
        let staging = self.device.create_buffer(&wgpu::BufferDescriptor {
            label: Some("readback"),
            size: total,
            usage: wgpu::BufferUsages::MAP_READ | wgpu::BufferUsages::COPY_DST,
            mapped_at_creation: false,
        });
        let mut encoder = self
            .device
            .create_command_encoder(&wgpu::CommandEncoderDescriptor { label: Some("read") });
        let mut offset = 0;
        for (src, len) in &spans {
            encoder.copy_buffer_to_buffer(&self.positions, *src, &staging, offset, *len);
            offset += len;
        }
        self.queue.submit([encoder.finish()]);

        let (tx, rx) = std::sync::mpsc::channel();
        staging.map_async(wgpu::MapMode::Read, .., move |r| {
            let _ = tx.send(r);
        });
        self.wait()?;
        rx.recv().map_err(device_err)?.map_err(device_err)?;
        let raw: Vec<f32> = {
            let view = staging.get_mapped_range(..).map_err(device_err)?;
            bytemuck::cast_slice(&view).to_vec()
        };
        staging.unmap();

        Ok(match self.layout {
            Layout::RowMajor => raw,
            Layout::ColumnMajor => {
                let mut out = vec![0.0; count * self.dims];
                for d in 0..self.dims {
                    for p in 0..count {
                        out[p * self.dims + d] = raw[d * count + p];
                    }
                }
                out
            }
        })
    }

    fn write(&mut self, ids: &[usize], values: &[f32]) -> Result<(), EngineError> {
        let n = self.dims;
        for (row, &p) in ids.iter().enumerate() {
            let vals = &values[row * n..(row + 1) * n];
            match self.layout {
                Layout::RowMajor => self.queue.write_buffer(
                    &self.positions,
                    (p * n * 4) as u64,
                    bytemuck::cast_slice(vals),
                ),
                Layout::ColumnMajor => {
                    for (d, v) in vals.iter().enumerate() {
                        self.queue.write_buffer(
                            &self.positions,
                            ((d * self.particles + p) * 4) as u64,
                            bytemuck::bytes_of(v),
                        );
                    }
                }
            }
        }
        Ok(())
    }

    fn synchronize(&mut self) -> Result<(), EngineError> {
        self.queue.submit([]);
        self.wait()
    }
}
