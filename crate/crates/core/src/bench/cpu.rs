//! Process-level CPU meter.

use std::time::Instant;

fn cpu_clock(id: libc::clockid_t) -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid, writable timespec for the duration of the call.
    let rc = unsafe { libc::clock_gettime(id, &mut ts) };
    if rc != 0 {
        return 0.0;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 / 1e9
}

/// CPU time consumed by this process (all threads), in seconds.
pub fn process_cpu_seconds() -> f64 {
    cpu_clock(libc::CLOCK_PROCESS_CPUTIME_ID)
}

pub fn thread_cpu_seconds() -> f64 {
    cpu_clock(libc::CLOCK_THREAD_CPUTIME_ID)
}

/// Time the hypervisor gave this machine's CPUs to someone else (`steal`
/// in /proc/stat), averaged per CPU, in seconds. Zero where unavailable.
pub fn steal_seconds() -> f64 {
    let Ok(stat) = std::fs::read_to_string("/proc/stat") else {
        return 0.0;
    };
    let Some(ticks) = stat
        .lines()
        .next()
        .and_then(|l| l.split_whitespace().nth(8))
        .and_then(|t| t.parse::<f64>().ok())
    else {
        return 0.0;
    };
    // SAFETY: sysconf has no preconditions.
    let (hz, cpus) = unsafe { (libc::sysconf(libc::_SC_CLK_TCK), libc::sysconf(libc::_SC_NPROCESSORS_ONLN)) };
    if hz <= 0 || cpus <= 0 {
        return 0.0;
    }
    ticks / hz as f64 / cpus as f64
}

/// Busy-loops until this thread has consumed `seconds` of CPU time, so the
/// work is the same whether or not the thread gets preempted.
pub fn burn_cpu(seconds: f64) {
    if seconds <= 0.0 {
        return;
    }
    let until = thread_cpu_seconds() + seconds;
    while thread_cpu_seconds() < until {
        std::hint::spin_loop();
    }
}

/// CPU utilization of the process over a window, in percent of one core.
/// Stolen time is not counted as available: on a virtual machine it
/// stretches wall time without the process being able to run.
#[derive(Debug, Clone, Copy)]
pub struct CpuWindow {
    cpu: f64,
    steal: f64,
    wall: Instant,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CpuSample {
    pub cpu: f64,
    pub wall: f64,
    pub steal: f64,
}

impl CpuSample {
    pub fn available(&self) -> f64 {
        (self.wall - self.steal).max(0.0)
    }

    pub fn percent(&self) -> f64 {
        let available = self.available();
        if available <= 0.0 {
            return 0.0;
        }
        self.cpu / available * 100.0
    }
}

impl CpuWindow {
    pub fn start() -> Self {
        Self {
            cpu: process_cpu_seconds(),
            steal: steal_seconds(),
            wall: Instant::now(),
        }
    }

    pub fn sample(&self) -> CpuSample {
        CpuSample {
            cpu: process_cpu_seconds() - self.cpu,
            wall: self.wall.elapsed().as_secs_f64(),
            steal: steal_seconds() - self.steal,
        }
    }

    pub fn percent(&self) -> f64 {
        self.sample().percent()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn busy_work_registers_and_sleep_does_not() {
        let w = CpuWindow::start();
        std::thread::sleep(std::time::Duration::from_millis(50));
        assert!(w.percent() < 20.0);
        let before = process_cpu_seconds();
        burn_cpu(0.03);
        assert!(process_cpu_seconds() - before >= 0.03);
    }

    #[test]
    fn steal_is_excluded_from_available_time() {
        let s = CpuSample { cpu: 0.5, wall: 2.0, steal: 1.0 };
        assert_eq!(s.percent(), 50.0);
        assert_eq!(CpuSample { cpu: 0.1, wall: 0.0, steal: 0.0 }.percent(), 0.0);
        let a = steal_seconds();
        assert!(a >= 0.0 && steal_seconds() >= a);
    }
}
