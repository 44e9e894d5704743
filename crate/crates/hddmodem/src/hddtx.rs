//! Drive a symbol schedule against a disk: alternating positioned reads
//! between two distant sectors during carrier-on intervals, sleep during
//! carrier-off. Both target sectors advance by a stride on every iteration
//! to defeat any caching that survives the explicit cache-avoidance setup.
//!
//! Two backends exist: a file/block-device backend doing real positioned
//! reads with the wall clock, and a mock backend with a virtual clock and
//! fixed per-read latency for deterministic tests.

use std::fs::File;
use std::io::Write;
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::modulation::{Segment, SymbolSchedule};

pub const DEFAULT_SECTOR_SIZE: u32 = 512;
pub const DEFAULT_SECTOR_STRIDE: u64 = 10_000;

/// The pair of seek targets and how they advance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeekSpan {
    pub begin_sector: u64,
    pub end_sector: u64,
    /// Increment applied to both targets per iteration, wrapping at the
    /// device capacity.
    pub sector_stride: u64,
    pub sector_size_bytes: u32,
}

impl SeekSpan {
    pub fn new(begin_sector: u64, end_sector: u64) -> Result<Self> {
        let span = SeekSpan {
            begin_sector,
            end_sector,
            sector_stride: DEFAULT_SECTOR_STRIDE,
            sector_size_bytes: DEFAULT_SECTOR_SIZE,
        };
        span.validate(u64::MAX)?;
        Ok(span)
    }

    /// First and last addressable sectors of a device: the widest actuator
    /// sweep and the loudest seek noise.
    pub fn full_device(capacity_sectors: u64) -> Result<Self> {
        if capacity_sectors < 2 {
            return Err(Error::Backend("device too small for a seek span".into()));
        }
        Ok(SeekSpan {
            begin_sector: 0,
            end_sector: capacity_sectors - 1,
            sector_stride: DEFAULT_SECTOR_STRIDE,
            sector_size_bytes: DEFAULT_SECTOR_SIZE,
        })
    }

    pub fn validate(&self, capacity_sectors: u64) -> Result<()> {
        if self.begin_sector == self.end_sector {
            return Err(Error::InvalidParameter(
                "seek span endpoints must differ".into(),
            ));
        }
        if self.sector_stride == 0 {
            return Err(Error::InvalidParameter("sector stride must be positive".into()));
        }
        if self.begin_sector >= capacity_sectors || self.end_sector >= capacity_sectors {
            return Err(Error::InvalidParameter(
                "seek span exceeds device capacity".into(),
            ));
        }
        Ok(())
    }
}

/// One positioned read issued by the executor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeekEvent {
    /// Completion time, seconds on the backend's monotonic clock.
    pub timestamp_s: f64,
    pub target_sector: u64,
    pub latency_s: f64,
}

/// Cache-defeating measures the setup step can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CacheMeasure {
    /// Synchronized / non-cached I/O on the open handle.
    SynchronizedIo,
    /// Platform page-cache drop (privileged).
    PageCacheDrop,
    /// Device write-back cache disable.
    DeviceWriteCacheOff,
}

impl CacheMeasure {
    pub const ALL: [CacheMeasure; 3] = [
        CacheMeasure::SynchronizedIo,
        CacheMeasure::PageCacheDrop,
        CacheMeasure::DeviceWriteCacheOff,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MeasureStatus {
    Applied,
    Unavailable,
    Denied,
}

/// Outcome of the cache-avoidance setup; execution proceeds regardless,
/// since the advancing sector stride still defeats residual caching.
#[derive(Debug, Clone, Serialize)]
pub struct CacheReport {
    pub measures: Vec<(CacheMeasure, MeasureStatus)>,
}

impl CacheReport {
    pub fn applied_count(&self) -> usize {
        self.measures
            .iter()
            .filter(|(_, s)| *s == MeasureStatus::Applied)
            .count()
    }
}

/// A disk that can serve positioned single-sector reads, with its own
/// monotonic clock so the mock can run on virtual time.
pub trait SeekBackend {
    fn capacity_sectors(&self) -> u64;
    /// Read one sector at `sector`, returning the observed latency.
    fn read_sector(&mut self, sector: u64, sector_size: u32) -> Result<f64>;
    /// Seconds since the backend's epoch.
    fn now_s(&self) -> f64;
    fn sleep(&mut self, duration_s: f64);
    fn apply_measure(&mut self, measure: CacheMeasure) -> MeasureStatus;
}

/// Request every cache-defeating measure in order and report what stuck.
pub fn cache_avoidance_setup(backend: &mut dyn SeekBackend) -> CacheReport {
    let measures = CacheMeasure::ALL
        .iter()
        .map(|&m| (m, backend.apply_measure(m)))
        .collect();
    CacheReport { measures }
}

/// Warnings produced while executing a schedule.
#[derive(Debug, Clone, Serialize)]
pub struct ExecutionLog {
    pub events: Vec<SeekEvent>,
    pub warnings: Vec<String>,
}

impl ExecutionLog {
    /// CSV rows of `timestamp_s,sector,latency_s`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "timestamp_s,sector,latency_s")?;
        for e in &self.events {
            writeln!(w, "{},{},{}", e.timestamp_s, e.target_sector, e.latency_s)?;
        }
        Ok(())
    }
}

/// Run the schedule: tight alternating reads at the span endpoints during
/// carrier-on segments, sleep during carrier-off, both targets advancing by
/// the stride each iteration (wrapping before the device end).
pub fn execute_schedule(
    schedule: &SymbolSchedule,
    span: &SeekSpan,
    backend: &mut dyn SeekBackend,
) -> Result<ExecutionLog> {
    let capacity = backend.capacity_sectors();
    span.validate(capacity)?;
    let mut events = Vec::new();
    let mut warnings = Vec::new();
    let mut begin = span.begin_sector;
    let mut end = span.end_sector;

    for (i, seg) in schedule.segments.iter().enumerate() {
        let seg_start = backend.now_s();
        let deadline = seg_start + seg.duration_s;
        if seg.carrier_on {
            while backend.now_s() < deadline {
                for target in [begin, end] {
                    let latency = backend.read_sector(target, span.sector_size_bytes)?;
                    events.push(SeekEvent {
                        timestamp_s: backend.now_s(),
                        target_sector: target,
                        latency_s: latency,
                    });
                }
                begin = (begin + span.sector_stride) % capacity;
                end = (end + span.sector_stride) % capacity;
            }
        } else {
            backend.sleep(seg.duration_s);
        }
        let overrun = backend.now_s() - deadline;
        if overrun > 0.1 * seg.duration_s {
            warnings.push(format!(
                "segment {i}: deadline overrun {overrun:.3} s on {:.3} s segment",
                seg.duration_s
            ));
        }
    }

    Ok(ExecutionLog { events, warnings })
}

/// Reconstruct an on/off schedule from an event log: events separated by
/// gaps shorter than `gap_threshold_s` cluster into carrier-on segments,
/// larger gaps become carrier-off. The commanded schedule can then be
/// compared against what the disk actually did.
pub fn events_to_schedule(events: &[SeekEvent], gap_threshold_s: f64) -> SymbolSchedule {
    let mut segments = Vec::new();
    if events.is_empty() {
        return SymbolSchedule { segments };
    }
    let mut cluster_start = events[0];
    let mut prev = events[0];
    let flush = |first: SeekEvent, last: SeekEvent, segments: &mut Vec<Segment>| {
        // The first event's latency covers the read that started the
        // cluster; a single event still gets its own latency as duration.
        let duration = (last.timestamp_s - first.timestamp_s) + first.latency_s;
        segments.push(Segment {
            carrier_on: true,
            duration_s: duration.max(f64::MIN_POSITIVE),
        });
    };
    for &e in &events[1..] {
        let gap = e.timestamp_s - prev.timestamp_s;
        if gap >= gap_threshold_s {
            flush(cluster_start, prev, &mut segments);
            segments.push(Segment {
                carrier_on: false,
                duration_s: gap - prev.latency_s.min(gap / 2.0),
            });
            cluster_start = e;
        }
        prev = e;
    }
    flush(cluster_start, prev, &mut segments);
    SymbolSchedule { segments }
}

/// Deterministic in-memory backend on a virtual clock.
#[derive(Debug, Clone)]
pub struct MockBackend {
    capacity_sectors: u64,
    read_latency_s: f64,
    clock_s: f64,
    /// Capabilities the mock advertises, for exercising the setup report.
    pub allow_sync_io: bool,
    pub allow_page_drop: bool,
    pub allow_device_cache_off: bool,
    pub applied: Vec<CacheMeasure>,
}

impl MockBackend {
    pub fn new(capacity_sectors: u64, read_latency_s: f64) -> Self {
        MockBackend {
            capacity_sectors,
            read_latency_s,
            clock_s: 0.0,
            allow_sync_io: true,
            allow_page_drop: true,
            allow_device_cache_off: true,
            applied: Vec::new(),
        }
    }
}

impl SeekBackend for MockBackend {
    fn capacity_sectors(&self) -> u64 {
        self.capacity_sectors
    }

    fn read_sector(&mut self, sector: u64, _sector_size: u32) -> Result<f64> {
        if sector >= self.capacity_sectors {
            return Err(Error::Backend(format!(
                "read beyond capacity: sector {sector} of {}",
                self.capacity_sectors
            )));
        }
        self.clock_s += self.read_latency_s;
        Ok(self.read_latency_s)
    }

    fn now_s(&self) -> f64 {
        self.clock_s
    }

    fn sleep(&mut self, duration_s: f64) {
        self.clock_s += duration_s;
    }

    fn apply_measure(&mut self, measure: CacheMeasure) -> MeasureStatus {
        let allowed = match measure {
            CacheMeasure::SynchronizedIo => self.allow_sync_io,
            CacheMeasure::PageCacheDrop => self.allow_page_drop,
            CacheMeasure::DeviceWriteCacheOff => self.allow_device_cache_off,
        };
        if allowed {
            self.applied.push(measure);
            MeasureStatus::Applied
        } else {
            MeasureStatus::Denied
        }
    }
}

/// Positioned reads against a block device or a preallocated file, on the
/// wall clock.
pub struct FileBackend {
    path: PathBuf,
    file: File,
    capacity_sectors: u64,
    epoch: std::time::Instant,
    buf: Vec<u8>,
}

impl FileBackend {
    pub fn open<P: AsRef<Path>>(path: P, sector_size: u32) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path)?;
        let len = file.metadata()?.len();
        let capacity_sectors = len / sector_size as u64;
        if capacity_sectors < 2 {
            return Err(Error::Backend(format!(
                "{} is too small ({len} bytes) to seek across",
                path.display()
            )));
        }
        Ok(FileBackend {
            path,
            file,
            capacity_sectors,
            epoch: std::time::Instant::now(),
            buf: vec![0u8; sector_size as usize],
        })
    }
}

impl SeekBackend for FileBackend {
    fn capacity_sectors(&self) -> u64 {
        self.capacity_sectors
    }

    fn read_sector(&mut self, sector: u64, sector_size: u32) -> Result<f64> {
        if sector >= self.capacity_sectors {
            return Err(Error::Backend(format!("sector {sector} beyond capacity")));
        }
        if self.buf.len() != sector_size as usize {
            self.buf.resize(sector_size as usize, 0);
        }
        let start = std::time::Instant::now();
        self.file
            .read_exact_at(&mut self.buf, sector * sector_size as u64)?;
        Ok(start.elapsed().as_secs_f64())
    }

    fn now_s(&self) -> f64 {
        self.epoch.elapsed().as_secs_f64()
    }

    fn sleep(&mut self, duration_s: f64) {
        std::thread::sleep(std::time::Duration::from_secs_f64(duration_s));
    }

    fn apply_measure(&mut self, measure: CacheMeasure) -> MeasureStatus {
        match measure {
            CacheMeasure::SynchronizedIo => {
                // Reopen the handle with O_SYNC.
                use std::os::unix::fs::OpenOptionsExt;
                match std::fs::OpenOptions::new()
                    .read(true)
                    .custom_flags(libc_o_sync())
                    .open(&self.path)
                {
                    Ok(f) => {
                        self.file = f;
                        MeasureStatus::Applied
                    }
                    Err(_) => MeasureStatus::Unavailable,
                }
            }
            CacheMeasure::PageCacheDrop => {
                match std::fs::OpenOptions::new()
                    .write(true)
                    .open("/proc/sys/vm/drop_caches")
                {
                    Ok(mut f) => match f.write_all(b"3\n") {
                        Ok(()) => MeasureStatus::Applied,
                        Err(_) => MeasureStatus::Denied,
                    },
                    Err(e) if e.kind() == std::io::ErrorKind::PermissionDenied => {
                        MeasureStatus::Denied
                    }
                    Err(_) => MeasureStatus::Unavailable,
                }
            }
            // Turning the drive's write-back cache off needs device-level
            // tooling (hdparm or an ATA ioctl); not available through a
            // plain file handle.
            CacheMeasure::DeviceWriteCacheOff => MeasureStatus::Unavailable,
        }
    }
}

fn libc_o_sync() -> i32 {
    // O_SYNC on Linux; avoids pulling in the libc crate for one constant.
    0o4010000
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitString;
    use crate::modulation::{modulate, SymbolTiming};

    fn on_off_schedule(pattern: &[(bool, f64)]) -> SymbolSchedule {
        SymbolSchedule {
            segments: pattern
                .iter()
                .map(|&(carrier_on, duration_s)| Segment {
                    carrier_on,
                    duration_s,
                })
                .collect(),
        }
    }

    #[test]
    fn event_rate_matches_latency_and_segments() {
        let schedule = on_off_schedule(&[(true, 1.0), (false, 1.0)]);
        let span = SeekSpan::new(0, 500_000).unwrap();
        let mut backend = MockBackend::new(2_000_000, 0.005);
        let log = execute_schedule(&schedule, &span, &mut backend).unwrap();
        // 5 ms per read, two reads per iteration: ~200 events in the first
        // second, none in the second.
        let in_first: usize = log
            .events
            .iter()
            .filter(|e| e.timestamp_s <= 1.0 + 1e-9)
            .count();
        assert!((180..=220).contains(&in_first), "events {in_first}");
        assert_eq!(log.events.len(), in_first);
        assert!((backend.now_s() - 2.0).abs() < 0.02);
    }

    #[test]
    fn zero_bit_produces_no_events() {
        let timing = SymbolTiming::symmetric(0.7).unwrap();
        let schedule = modulate(&BitString::from("0"), &timing).unwrap();
        let span = SeekSpan::new(0, 100).unwrap();
        let mut backend = MockBackend::new(1000, 0.005);
        let log = execute_schedule(&schedule, &span, &mut backend).unwrap();
        assert!(log.events.is_empty());
        assert!((backend.now_s() - 0.7).abs() < 1e-9);
    }

    #[test]
    fn stride_wraps_before_device_end() {
        let schedule = on_off_schedule(&[(true, 0.5)]);
        let span = SeekSpan {
            begin_sector: 990,
            end_sector: 500,
            sector_stride: 100,
            sector_size_bytes: 512,
        };
        let mut backend = MockBackend::new(1000, 0.005);
        let log = execute_schedule(&schedule, &span, &mut backend).unwrap();
        assert!(!log.events.is_empty());
        assert!(log.events.iter().all(|e| e.target_sector < 1000));
        // The 990 target must have wrapped to low sectors at some point.
        assert!(log
            .events
            .iter()
            .any(|e| e.target_sector < 990 && e.target_sector % 100 == 90));
    }

    #[test]
    fn timestamps_strictly_increase() {
        let schedule = on_off_schedule(&[(true, 0.3), (false, 0.1), (true, 0.3)]);
        let span = SeekSpan::new(0, 100_000).unwrap();
        let mut backend = MockBackend::new(1_000_000, 0.004);
        let log = execute_schedule(&schedule, &span, &mut backend).unwrap();
        for pair in log.events.windows(2) {
            assert!(pair[1].timestamp_s > pair[0].timestamp_s);
        }
    }

    #[test]
    fn no_events_during_off_segments() {
        let schedule = on_off_schedule(&[(true, 1.0), (false, 2.0), (true, 1.0)]);
        let span = SeekSpan::new(0, 100_000).unwrap();
        let mut backend = MockBackend::new(1_000_000, 0.005);
        let log = execute_schedule(&schedule, &span, &mut backend).unwrap();
        // The off window spans (t_on_end, t_on_end + 2.0].
        let boundary = log
            .events
            .iter()
            .filter(|e| e.timestamp_s <= 1.0 + 1e-9)
            .last()
            .unwrap()
            .timestamp_s;
        assert!(!log
            .events
            .iter()
            .any(|e| e.timestamp_s > boundary + 1e-9 && e.timestamp_s < boundary + 2.0 - 1e-9));
    }

    #[test]
    fn round_trip_reconstruction_within_ten_percent() {
        let commanded = on_off_schedule(&[(true, 1.0), (false, 2.0), (true, 1.0)]);
        let span = SeekSpan::new(0, 100_000).unwrap();
        let mut backend = MockBackend::new(1_000_000, 0.005);
        let log = execute_schedule(&commanded, &span, &mut backend).unwrap();
        let got = events_to_schedule(&log.events, 0.5);
        assert_eq!(got.segments.len(), 3);
        for (a, b) in commanded.segments.iter().zip(&got.segments) {
            assert_eq!(a.carrier_on, b.carrier_on);
            assert!(
                (a.duration_s - b.duration_s).abs() <= 0.1 * a.duration_s,
                "commanded {} got {}",
                a.duration_s,
                b.duration_s
            );
        }
    }

    #[test]
    fn empty_log_is_empty_schedule() {
        assert!(events_to_schedule(&[], 0.5).segments.is_empty());
    }

    #[test]
    fn single_event_is_minimal_on_segment() {
        let events = [SeekEvent {
            timestamp_s: 1.0,
            target_sector: 5,
            latency_s: 0.004,
        }];
        let s = events_to_schedule(&events, 0.5);
        assert_eq!(s.segments.len(), 1);
        assert!(s.segments[0].carrier_on);
        assert!((s.segments[0].duration_s - 0.004).abs() < 1e-12);
    }

    #[test]
    fn cache_setup_reports_all_applied_on_capable_mock() {
        let mut backend = MockBackend::new(1000, 0.005);
        let report = cache_avoidance_setup(&mut backend);
        assert_eq!(report.applied_count(), 3);
        assert_eq!(backend.applied.len(), 3);
    }

    #[test]
    fn cache_setup_reports_denials() {
        let mut backend = MockBackend::new(1000, 0.005);
        backend.allow_page_drop = false;
        let report = cache_avoidance_setup(&mut backend);
        assert_eq!(report.applied_count(), 2);
        assert!(report
            .measures
            .iter()
            .any(|(m, s)| *m == CacheMeasure::PageCacheDrop && *s == MeasureStatus::Denied));
    }

    #[test]
    fn file_backend_reads_and_reports_device_cache_unavailable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("disk.img");
        std::fs::write(&path, vec![0u8; 512 * 64]).unwrap();
        let mut backend = FileBackend::open(&path, 512).unwrap();
        assert_eq!(backend.capacity_sectors(), 64);
        let latency = backend.read_sector(3, 512).unwrap();
        assert!(latency >= 0.0);
        let report = cache_avoidance_setup(&mut backend);
        assert!(report
            .measures
            .iter()
            .any(|(m, s)| *m == CacheMeasure::DeviceWriteCacheOff
                && *s == MeasureStatus::Unavailable));
    }

    #[test]
    fn span_validation() {
        assert!(SeekSpan::new(5, 5).is_err());
        let span = SeekSpan {
            begin_sector: 0,
            end_sector: 10,
            sector_stride: 0,
            sector_size_bytes: 512,
        };
        assert!(span.validate(100).is_err());
        let span = SeekSpan::new(0, 1000).unwrap();
        assert!(span.validate(100).is_err());
    }
}
