//! Small shared helpers: deterministic directory walking, a bounded worker
//! pool, and an advisory lock file.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

/// Recursively lists files under `root` in a stable, sorted order.
/// `skip_dir` is consulted with each directory name before descending.
pub fn walk_sorted(root: &Path, skip_dir: &dyn Fn(&str) -> bool) -> io::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let mut entries: Vec<PathBuf> = fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<io::Result<_>>()?;
        entries.sort();
        for entry in entries {
            if entry.is_dir() {
                let name = entry.file_name().and_then(|n| n.to_str()).unwrap_or("");
                if !skip_dir(name) {
                    stack.push(entry);
                }
            } else {
                files.push(entry);
            }
        }
    }
    files.sort();
    Ok(files)
}

/// Runs `work` over `items` on up to `jobs` threads, returning results in
/// input order.
pub fn parallel_map<T, R, F>(jobs: usize, items: Vec<T>, work: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.into_iter().map(work).collect();
    }
    let queue: Vec<Mutex<Option<T>>> = items.into_iter().map(|i| Mutex::new(Some(i))).collect();
    let results: Vec<Mutex<Option<R>>> = (0..queue.len()).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= queue.len() {
                    break;
                }
                let item = queue[index].lock().unwrap().take().expect("claimed once");
                let result = work(item);
                *results[index].lock().unwrap() = Some(result);
            });
        }
    });
    results
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled slot"))
        .collect()
}

/// Puts the child into its own process group so a timeout can kill the
/// whole subprocess tree.
pub fn isolate_process_group(command: &mut std::process::Command) {
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        command.process_group(0);
    }
}

/// Kills the child's entire process group (the child itself elsewhere).
pub fn kill_process_tree(child: &mut std::process::Child) {
    #[cfg(unix)]
    {
        unsafe {
            libc::killpg(child.id() as i32, libc::SIGKILL);
        }
    }
    #[cfg(not(unix))]
    {
        let _ = child.kill();
    }
}

/// Advisory lock file; created exclusively, removed on drop.
pub struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    /// Acquires `<dir>/.scanforge.lock`, retrying briefly before giving up.
    pub fn acquire(dir: &Path) -> io::Result<LockGuard> {
        fs::create_dir_all(dir)?;
        let path = dir.join(".scanforge.lock");
        for _ in 0..50 {
            match fs::OpenOptions::new()
                .write(true)
                .create_new(true)
                .open(&path)
            {
                Ok(_) => return Ok(LockGuard { path }),
                Err(err) if err.kind() == io::ErrorKind::AlreadyExists => {
                    thread::sleep(Duration::from_millis(100));
                }
                Err(err) => return Err(err),
            }
        }
        Err(io::Error::new(
            io::ErrorKind::WouldBlock,
            format!("lock file {} is held by another process", path.display()),
        ))
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
