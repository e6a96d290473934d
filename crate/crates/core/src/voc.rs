//! Pascal VOC XML annotations and plain-text detection files.
//!
//! This is the only place where VOC's 1-based inclusive pixel coordinates
//! are converted to the internal 0-based half-open convention
//! (`xmin <- xmin - 1`, `ymin <- ymin - 1`, max edges unchanged).

use std::fmt::Write as _;
use std::path::Path;

use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use crate::bbox::BBox;
use crate::error::{Error, Result};

/// One labeled object of a ground-truth annotation. VOC's
/// difficult/occluded/truncated flags are parsed and discarded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject {
    pub label: String,
    pub bbox: BBox,
}

/// One image's ground-truth record with Pascal VOC semantics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageAnnotation {
    /// Filename stem of the annotated image.
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub depth: u32,
    pub objects: Vec<GroundTruthObject>,
}

impl ImageAnnotation {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Schema(format!(
                "image '{}' has zero dimension {}x{}",
                self.image_id, self.width, self.height
            )));
        }
        if self.image_id.is_empty() {
            return Err(Error::Schema("empty image id".into()));
        }
        for (i, obj) in self.objects.iter().enumerate() {
            if obj.label.is_empty() {
                return Err(Error::Schema(format!("object {i} has an empty label")));
            }
            obj.bbox.validate().map_err(|e| {
                Error::Geometry(format!("object {i} of '{}': {e}", self.image_id))
            })?;
            if obj.bbox.xmax > self.width as f64 || obj.bbox.ymax > self.height as f64 {
                return Err(Error::Geometry(format!(
                    "object {i} of '{}' exceeds image bounds {}x{}: {:?}",
                    self.image_id, self.width, self.height, obj.bbox
                )));
            }
        }
        Ok(())
    }
}

/// One model prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub image_id: String,
    pub label: String,
    /// Confidence as a fraction in [0, 1].
    pub confidence: f64,
    pub bbox: BBox,
}

fn line_of(text: &str, byte_offset: usize) -> usize {
    let upto = byte_offset.min(text.len());
    text[..upto].bytes().filter(|b| *b == b'\n').count() + 1
}

#[derive(Default)]
struct RawObject {
    name: Option<String>,
    xmin: Option<f64>,
    ymin: Option<f64>,
    xmax: Option<f64>,
    ymax: Option<f64>,
    saw_bndbox: bool,
}

/// Parses a Pascal VOC annotation document.
///
/// Unknown elements are ignored; difficult/truncated/occluded flags are
/// dropped. Coordinates may be fractional (augmented boxes). Raw boxes with
/// `xmax <= xmin` or `ymax <= ymin` are rejected before conversion.
pub fn parse_annotation(xml_text: &str) -> Result<ImageAnnotation> {
    let mut reader = Reader::from_str(xml_text);
    reader.config_mut().trim_text(true);

    let mut path: Vec<String> = Vec::new();
    let mut filename: Option<String> = None;
    let mut width: Option<u32> = None;
    let mut height: Option<u32> = None;
    let mut depth: Option<u32> = None;
    let mut objects: Vec<RawObject> = Vec::new();
    let mut saw_size = false;
    let mut text_buf = String::new();

    loop {
        let pos = reader.buffer_position() as usize;
        match reader.read_event() {
            Err(e) => {
                return Err(Error::XmlParse {
                    line: line_of(xml_text, reader.error_position() as usize),
                    message: e.to_string(),
                })
            }
            Ok(Event::Eof) => break,
            Ok(Event::Start(start)) => {
                let name = String::from_utf8_lossy(start.name().as_ref()).into_owned();
                path.push(name);
                text_buf.clear();
                match path_str(&path).as_str() {
                    "annotation/object" => objects.push(RawObject::default()),
                    "annotation/size" => saw_size = true,
                    "annotation/object/bndbox" => {
                        if let Some(obj) = objects.last_mut() {
                            obj.saw_bndbox = true;
                        }
                    }
                    _ => {}
                }
            }
            Ok(Event::Text(t)) => {
                let t = t.unescape().map_err(|e| Error::XmlParse {
                    line: line_of(xml_text, pos),
                    message: e.to_string(),
                })?;
                text_buf.push_str(&t);
            }
            Ok(Event::End(_)) => {
                let here = path_str(&path);
                let text = text_buf.trim().to_string();
                let line = line_of(xml_text, pos);
                match here.as_str() {
                    "annotation/filename" => filename = Some(text),
                    "annotation/size/width" => width = Some(parse_dim(&text, "width", line)?),
                    "annotation/size/height" => height = Some(parse_dim(&text, "height", line)?),
                    "annotation/size/depth" => depth = Some(parse_dim(&text, "depth", line)?),
                    "annotation/object/name" => {
                        if let Some(obj) = objects.last_mut() {
                            obj.name = Some(text);
                        }
                    }
                    "annotation/object/bndbox/xmin" => {
                        set_coord(&mut objects, |o| &mut o.xmin, &text, line)?
                    }
                    "annotation/object/bndbox/ymin" => {
                        set_coord(&mut objects, |o| &mut o.ymin, &text, line)?
                    }
                    "annotation/object/bndbox/xmax" => {
                        set_coord(&mut objects, |o| &mut o.xmax, &text, line)?
                    }
                    "annotation/object/bndbox/ymax" => {
                        set_coord(&mut objects, |o| &mut o.ymax, &text, line)?
                    }
                    _ => {}
                }
                path.pop();
                text_buf.clear();
            }
            Ok(_) => {}
        }
    }

    let filename =
        filename.ok_or_else(|| Error::Schema("missing <filename> element".into()))?;
    if !saw_size {
        return Err(Error::Schema("missing <size> element".into()));
    }
    let width = width.ok_or_else(|| Error::Schema("missing <size>/<width>".into()))?;
    let height = height.ok_or_else(|| Error::Schema("missing <size>/<height>".into()))?;
    let depth = depth.unwrap_or(3);
    if width == 0 || height == 0 {
        return Err(Error::Schema(format!("zero image dimension {width}x{height}")));
    }

    let image_id = Path::new(&filename)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| filename.clone());

    let mut converted = Vec::with_capacity(objects.len());
    for (i, raw) in objects.into_iter().enumerate() {
        let label = raw
            .name
            .ok_or_else(|| Error::Schema(format!("object {i}: missing <name>")))?;
        if label.is_empty() {
            return Err(Error::Schema(format!("object {i}: empty <name>")));
        }
        if !raw.saw_bndbox {
            return Err(Error::Schema(format!("object {i}: missing <bndbox>")));
        }
        let (xmin, ymin, xmax, ymax) = match (raw.xmin, raw.ymin, raw.xmax, raw.ymax) {
            (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
            _ => {
                return Err(Error::Schema(format!(
                    "object {i}: incomplete <bndbox>"
                )))
            }
        };
        // Reject degenerate boxes on the raw VOC values, then shift the
        // 1-based inclusive min edges down by one pixel.
        if xmax <= xmin || ymax <= ymin {
            return Err(Error::Geometry(format!(
                "object {i}: degenerate bndbox ({xmin},{ymin},{xmax},{ymax})"
            )));
        }
        let bbox = BBox::new(xmin - 1.0, ymin - 1.0, xmax, ymax)
            .map_err(|e| Error::Geometry(format!("object {i}: {e}")))?;
        if bbox.xmax > width as f64 || bbox.ymax > height as f64 {
            return Err(Error::Geometry(format!(
                "object {i}: box {bbox:?} exceeds image bounds {width}x{height}"
            )));
        }
        converted.push(GroundTruthObject { label, bbox });
    }

    Ok(ImageAnnotation {
        image_id,
        width,
        height,
        depth,
        objects: converted,
    })
}

fn path_str(path: &[String]) -> String {
    path.join("/")
}

fn parse_dim(text: &str, what: &str, line: usize) -> Result<u32> {
    text.parse::<u32>().map_err(|_| Error::XmlParse {
        line,
        message: format!("invalid <{what}> value '{text}'"),
    })
}

fn set_coord(
    objects: &mut [RawObject],
    field: impl Fn(&mut RawObject) -> &mut Option<f64>,
    text: &str,
    line: usize,
) -> Result<()> {
    let value = text.parse::<f64>().map_err(|_| Error::XmlParse {
        line,
        message: format!("invalid coordinate '{text}'"),
    })?;
    if let Some(obj) = objects.last_mut() {
        *field(obj) = Some(value);
    }
    Ok(())
}

/// Renders a coordinate the way VOC tools do: integral values without a
/// fractional part, fractional values in shortest round-trip form.
fn fmt_coord(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 9e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Serializes an annotation to VOC XML such that
/// `parse_annotation(write_annotation(a)) == a` field-exactly.
///
/// Serialization is refused when the record violates its invariants.
pub fn write_annotation(ann: &ImageAnnotation) -> Result<String> {
    ann.validate()?;
    let mut xml = String::new();
    xml.push_str("<annotation>\n");
    let _ = writeln!(xml, "  <folder>images</folder>");
    let _ = writeln!(xml, "  <filename>{}.png</filename>", escape_xml(&ann.image_id));
    xml.push_str("  <size>\n");
    let _ = writeln!(xml, "    <width>{}</width>", ann.width);
    let _ = writeln!(xml, "    <height>{}</height>", ann.height);
    let _ = writeln!(xml, "    <depth>{}</depth>", ann.depth);
    xml.push_str("  </size>\n");
    xml.push_str("  <segmented>0</segmented>\n");
    for obj in &ann.objects {
        xml.push_str("  <object>\n");
        let _ = writeln!(xml, "    <name>{}</name>", escape_xml(&obj.label));
        xml.push_str("    <pose>Unspecified</pose>\n");
        xml.push_str("    <truncated>0</truncated>\n");
        xml.push_str("    <difficult>0</difficult>\n");
        xml.push_str("    <bndbox>\n");
        let _ = writeln!(xml, "      <xmin>{}</xmin>", fmt_coord(obj.bbox.xmin + 1.0));
        let _ = writeln!(xml, "      <ymin>{}</ymin>", fmt_coord(obj.bbox.ymin + 1.0));
        let _ = writeln!(xml, "      <xmax>{}</xmax>", fmt_coord(obj.bbox.xmax));
        let _ = writeln!(xml, "      <ymax>{}</ymax>", fmt_coord(obj.bbox.ymax));
        xml.push_str("    </bndbox>\n");
        xml.push_str("  </object>\n");
    }
    xml.push_str("</annotation>\n");
    Ok(xml)
}

/// Parses a plain-text detection file: one detection per line,
/// `<label> <confidence> <xmin> <ymin> <xmax> <ymax>`, coordinates already
/// in the internal 0-based half-open convention. Blank lines are skipped.
pub fn parse_detections(text: &str, image_id: &str) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::LineParse {
                line: line_no,
                message: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let label = fields[0].to_string();
        let nums: Vec<f64> = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::LineParse {
                    line: line_no,
                    message: format!("non-numeric field '{f}'"),
                })
            })
            .collect::<Result<_>>()?;
        let confidence = nums[0];
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::Range(format!(
                "line {line_no}: confidence {confidence} outside [0, 1]"
            )));
        }
        let bbox = BBox::new(nums[1], nums[2], nums[3], nums[4])
            .map_err(|e| Error::Geometry(format!("line {line_no}: {e}")))?;
        out.push(Detection {
            image_id: image_id.to_string(),
            label,
            confidence,
            bbox,
        });
    }
    Ok(out)
}

/// Inverse of [`parse_detections`]: single-space separated, `\n` terminated.
pub fn format_detections(dets: &[Detection]) -> String {
    let mut out = String::new();
    for d in dets {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            d.label,
            d.confidence,
            fmt_coord(d.bbox.xmin),
            fmt_coord(d.bbox.ymin),
            fmt_coord(d.bbox.xmax),
            fmt_coord(d.bbox.ymax)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"<annotation>
  <folder>images</folder>
  <filename>frame_0001.png</filename>
  <size>
    <width>300</width>
    <height>300</height>
    <depth>3</depth>
  </size>
  <object>
    <name>tomato</name>
    <pose>Unspecified</pose>
    <truncated>1</truncated>
    <difficult>0</difficult>
    <bndbox>
      <xmin>11</xmin>
      <ymin>21</ymin>
      <xmax>50</xmax>
      <ymax>80</ymax>
    </bndbox>
  </object>
</annotation>
"#;

    #[test]
    fn parses_with_one_based_shift() {
        let ann = parse_annotation(SAMPLE).unwrap();
        assert_eq!(ann.image_id, "frame_0001");
        assert_eq!((ann.width, ann.height, ann.depth), (300, 300, 3));
        assert_eq!(ann.objects.len(), 1);
        assert_eq!(ann.objects[0].label, "tomato");
        assert_eq!(
            ann.objects[0].bbox,
            BBox::new(10.0, 20.0, 50.0, 80.0).unwrap()
        );
    }

    #[test]
    fn zero_objects_is_valid() {
        let xml = r#"<annotation><filename>a.png</filename>
            <size><width>10</width><height>10</height><depth>3</depth></size>
            </annotation>"#;
        let ann = parse_annotation(xml).unwrap();
        assert!(ann.objects.is_empty());
    }

    #[test]
    fn degenerate_bndbox_rejected() {
        let xml = SAMPLE.replace("<xmin>11</xmin>", "<xmin>50</xmin>");
        let err = parse_annotation(&xml).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)), "got {err:?}");
        assert!(err.to_string().contains("object 0"));
    }

    #[test]
    fn missing_size_is_schema_error() {
        let xml = "<annotation><filename>a.png</filename></annotation>";
        assert!(matches!(
            parse_annotation(xml).unwrap_err(),
            Error::Schema(_)
        ));
    }

    #[test]
    fn missing_bndbox_is_schema_error() {
        let xml = r#"<annotation><filename>a.png</filename>
            <size><width>10</width><height>10</height><depth>3</depth></size>
            <object><name>tomato</name></object></annotation>"#;
        assert!(matches!(
            parse_annotation(xml).unwrap_err(),
            Error::Schema(_)
        ));
    }

    #[test]
    fn malformed_xml_reports_line() {
        let xml = "<annotation>\n<filename>a.png</filename>\n<size>\n</annotation>";
        match parse_annotation(xml).unwrap_err() {
            Error::XmlParse { line, .. } => assert!(line >= 3, "line was {line}"),
            other => panic!("expected XmlParse, got {other:?}"),
        }
    }

    #[test]
    fn unknown_elements_ignored() {
        let xml = SAMPLE.replace(
            "<object>",
            "<weird><inner>5</inner></weird><source><database>x</database></source><object>",
        );
        let ann = parse_annotation(&xml).unwrap();
        assert_eq!(ann.objects.len(), 1);
    }

    #[test]
    fn fractional_coordinates_accepted() {
        let xml = SAMPLE
            .replace("<xmin>11</xmin>", "<xmin>11.25</xmin>")
            .replace("<xmax>50</xmax>", "<xmax>49.75</xmax>");
        let ann = parse_annotation(&xml).unwrap();
        assert_eq!(ann.objects[0].bbox.xmin, 10.25);
        assert_eq!(ann.objects[0].bbox.xmax, 49.75);
    }

    #[test]
    fn write_emits_one_object_per_record() {
        let ann = parse_annotation(SAMPLE).unwrap();
        let xml = write_annotation(&ann).unwrap();
        assert_eq!(xml.matches("<object>").count(), 1);
        assert!(xml.contains("<xmin>11</xmin>"));
    }

    #[test]
    fn round_trip_three_objects() {
        let mut ann = parse_annotation(SAMPLE).unwrap();
        ann.objects.push(GroundTruthObject {
            label: "tomato".into(),
            bbox: BBox::new(100.5, 7.0, 140.25, 52.125).unwrap(),
        });
        ann.objects.push(GroundTruthObject {
            label: "tomato".into(),
            bbox: BBox::new(0.0, 0.0, 300.0, 300.0).unwrap(),
        });
        let xml = write_annotation(&ann).unwrap();
        let back = parse_annotation(&xml).unwrap();
        assert_eq!(back, ann);
    }

    #[test]
    fn write_refuses_invalid() {
        let ann = ImageAnnotation {
            image_id: "x".into(),
            width: 0,
            height: 10,
            depth: 3,
            objects: vec![],
        };
        assert!(write_annotation(&ann).is_err());
    }

    #[test]
    fn detections_parse_and_gate() {
        let dets = parse_detections("tomato 0.90 10 20 50 80\n", "img1").unwrap();
        assert_eq!(dets.len(), 1);
        assert_eq!(dets[0].label, "tomato");
        assert_eq!(dets[0].confidence, 0.90);
        assert_eq!(dets[0].bbox, BBox::new(10.0, 20.0, 50.0, 80.0).unwrap());

        assert!(parse_detections("", "img1").unwrap().is_empty());

        assert!(matches!(
            parse_detections("tomato 1.5 0 0 10 10", "img1").unwrap_err(),
            Error::Range(_)
        ));
        match parse_detections("tomato x 0 0 10 10", "img1").unwrap_err() {
            Error::LineParse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected LineParse, got {other:?}"),
        }
    }

    mod fuzz {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Totality: any input yields a value or a structured error,
            // never a panic.
            #[test]
            fn parse_annotation_never_panics(input in "\\PC*") {
                let _ = parse_annotation(&input);
            }

            #[test]
            fn parse_annotation_never_panics_on_xmlish(input in "[<>a-z0-9/ \n]*") {
                let _ = parse_annotation(&input);
            }

            #[test]
            fn parse_detections_never_panics(input in "\\PC*") {
                let _ = parse_detections(&input, "img");
            }
        }
    }

    #[test]
    fn detections_format_round_trip() {
        let dets = vec![
            Detection {
                image_id: "img".into(),
                label: "tomato".into(),
                confidence: 0.75,
                bbox: BBox::new(1.5, 2.0, 10.0, 22.25).unwrap(),
            },
            Detection {
                image_id: "img".into(),
                label: "tomato".into(),
                confidence: 1.0,
                bbox: BBox::new(0.0, 0.0, 5.0, 5.0).unwrap(),
            },
        ];
        let text = format_detections(&dets);
        let back = parse_detections(&text, "img").unwrap();
        assert_eq!(back, dets);
    }
}
