"""
Common Utility Functions
Number formatting, aligned text tables and atomic file output
"""

import os
import csv
import tempfile
from typing import Callable, Dict, List, Optional, Tuple
from pathlib import Path

from config import OUTPUT_CONFIG


def format_float(value: float) -> str:
    """Lossless scientific notation used in every CSV output"""
    return OUTPUT_CONFIG['float_format'].format(float(value))


def create_directory_if_not_exists(dir_path: str) -> bool:
    """Create directory if it doesn't exist"""
    try:
        Path(dir_path).mkdir(parents=True, exist_ok=True)
        return True
    except OSError as e:
        print(f"❌ Error creating directory {dir_path}: {e}")
        return False


def _stage(file_path: str, write) -> str:
    """Write into a temporary file next to the target; returns the temporary path"""
    target = Path(file_path)
    if not create_directory_if_not_exists(str(target.parent)):
        raise OSError(f"Cannot create output directory: {target.parent}")

    handle, temp_path = tempfile.mkstemp(dir=str(target.parent), prefix=f".{target.name}.", suffix='.tmp')
    try:
        with os.fdopen(handle, 'w', newline='', encoding='utf-8') as f:
            write(f)
    except BaseException:
        os.remove(temp_path)
        raise
    return temp_path


def _commit(staged: List[Tuple[str, str]]):
    """Rename staged files over their targets; a failed rename restores every earlier target"""
    placed: List[Tuple[str, Optional[str]]] = []
    try:
        for temp_path, file_path in staged:
            backup = None
            if os.path.isfile(file_path):
                backup = f"{temp_path}.old"
                os.replace(file_path, backup)
            placed.append((file_path, backup))
            os.replace(temp_path, file_path)
    except OSError:
        for file_path, backup in reversed(placed):
            if backup is not None:
                os.replace(backup, file_path)
            elif os.path.isfile(file_path):
                os.remove(file_path)
        raise
    for _, backup in placed:
        if backup is not None:
            os.remove(backup)


def write_files(entries: List[Tuple[str, Callable]]) -> Tuple[bool, List[str]]:
    """
    Stage every (path, writer) pair and rename them into place only after all were written.
    On failure every target keeps its previous content and no temporary file is left behind.
    """
    staged: List[Tuple[str, str]] = []
    current = None
    try:
        for file_path, write in entries:
            current = file_path
            staged.append((_stage(file_path, write), file_path))
        current = ', '.join(file_path for _, file_path in staged)
        _commit(staged)
        return True, []
    except PermissionError:
        return False, [f"Permission denied: {current}"]
    except OSError as e:
        return False, [f"Error writing file {current}: {e}"]
    finally:
        for temp_path, _ in staged:
            if os.path.exists(temp_path):
                os.remove(temp_path)


def csv_writer(data: List[Dict], headers: List[str]) -> Callable:
    """Writer callback for write_files producing a CSV table"""
    def write(f):
        writer = csv.DictWriter(f, fieldnames=headers, lineterminator='\n')
        writer.writeheader()
        writer.writerows(data)
    return write


def text_writer(text: str) -> Callable:
    return lambda f: f.write(text)


def format_table_data(headers: List[str], rows: List[List[str]]) -> List[str]:
    """
    Right-aligned text table for convergence reports.
    Cells are never cut, so every printed digit survives.
    """
    if not rows:
        return ["(no levels)"]

    widths = [max(len(str(cell)) for cell in column) for column in zip(headers, *rows)]

    def line(cells) -> str:
        return "  ".join(str(cell).rjust(width) for cell, width in zip(cells, widths))

    return [line(headers), "  ".join("-" * width for width in widths)] + [line(row) for row in rows]


def display_progress_bar(t: float, final_time: float, width: int = 30, label: str = "") -> str:
    """Bar over simulated time, 't = 0.5000 / 10' style suffix"""
    fraction = 1.0 if final_time <= 0 else min(max(t / final_time, 0.0), 1.0)
    filled = int(round(width * fraction))
    bar = "#" * filled + "." * (width - filled)
    prefix = f"{label} " if label else ""
    return f"{prefix}[{bar}] t = {t:.4f} / {final_time:g}"
