//! Pascal VOC annotation IO: parsing, validation, and lossless round trips.

use vocdet::voc::{format_detections, parse_annotation, parse_detections, write_annotation};

fn main() -> vocdet::Result<()> {
    let xml = r#"<annotation>
  <folder>images</folder>
  <filename>row3_frame_0042.png</filename>
  <size><width>300</width><height>300</height><depth>3</depth></size>
  <object>
    <name>tomato</name>
    <truncated>1</truncated>
    <difficult>0</difficult>
    <bndbox><xmin>11</xmin><ymin>21</ymin><xmax>50</xmax><ymax>80</ymax></bndbox>
  </object>
  <object>
    <name>tomato</name>
    <bndbox><xmin>120.5</xmin><ymin>40</ymin><xmax>180.25</xmax><ymax>110</ymax></bndbox>
  </object>
</annotation>"#;

    let ann = parse_annotation(xml)?;
    println!("image id : {}", ann.image_id);
    println!("size     : {}x{}x{}", ann.width, ann.height, ann.depth);
    for (i, obj) in ann.objects.iter().enumerate() {
        // VOC's 1-based inclusive pixels become 0-based half-open boxes, so
        // the first bndbox (11,21,50,80) reads back as (10,20,50,80).
        println!("object {i}: {} at {:?}", obj.label, obj.bbox);
    }

    let emitted = write_annotation(&ann)?;
    let reparsed = parse_annotation(&emitted)?;
    println!("round trip exact: {}", reparsed == ann);

    // Detection files are one line per prediction:
    // <label> <confidence> <xmin> <ymin> <xmax> <ymax>
    let dets = parse_detections("tomato 0.90 10 20 50 80\ntomato 0.55 120 40 180 110\n", &ann.image_id)?;
    println!("parsed {} detections; first confidence {}", dets.len(), dets[0].confidence);
    print!("{}", format_detections(&dets));

    // Errors are structured, never panics: a degenerate box is refused.
    let bad = xml.replace("<xmin>11</xmin>", "<xmin>50</xmin>");
    println!("degenerate box -> {}", parse_annotation(&bad).unwrap_err());
    Ok(())
}
